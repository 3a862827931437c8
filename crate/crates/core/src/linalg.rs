//! Banded symmetric linear algebra for the tangent stiffness systems.
//!
//! Meridian meshes couple each degree of freedom only to its neighbours, so
//! the stiffness matrix is symmetric with a small half-bandwidth. An LDL^T
//! factorization without pivoting is enough here and, unlike a Cholesky, it
//! works on indefinite matrices; the signs of D expose the matrix inertia,
//! which is how equilibrium stability is decided (a state is stable when no
//! negative pivot appears, a sharper test than the determinant sign, which
//! misses even counts of negative eigenvalues).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric banded matrix in upper-diagonal storage: entry `(i, i + d)` for
/// `0 <= d <= half_bandwidth` lives at `data[i * (hb + 1) + d]`.
#[derive(Debug, Clone)]
pub struct BandedSymmetric<T> {
    n: usize,
    hb: usize,
    data: Vec<T>,
}

impl<T: Real> BandedSymmetric<T> {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        Self { n, hb: half_bandwidth, data: vec![T::zero(); n * (half_bandwidth + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.hb
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        (hi < self.n && d <= self.hb).then(|| lo * (self.hb + 1) + d)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.n && j < self.n, "index ({i}, {j}) out of range for n = {}", self.n);
        self.index(i, j).map_or(T::zero(), |k| self.data[k])
    }

    /// Accumulate `v` into entry `(i, j)`. Panics outside the band: the
    /// assembly loops own the sparsity pattern and a miss is a bug.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self
            .index(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside half-bandwidth {}", self.hb));
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self
            .index(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside half-bandwidth {}", self.hb));
        self.data[k] = v;
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(T::zero());
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.hb)..(i + self.hb + 1).min(self.n) {
                y[i] += self.get(i, j) * x[j];
            }
        }
        y
    }

    /// Factor `A = L D L^T` without pivoting. Fails on a (numerically)
    /// zero pivot or non-finite arithmetic.
    pub fn ldlt(&self) -> Result<LdltFactor<T>> {
        let n = self.n;
        let hb = self.hb;
        let w = hb + 1;
        // f[j * w] holds D_j; f[j * w + d] holds L[j + d][j] for d >= 1.
        let mut f = self.data.clone();
        let mut scale = T::zero();
        for j in 0..n {
            scale = scale.max(f[j * w].abs());
        }
        let tiny = (scale.max(T::one())) * T::epsilon() * T::of(64.0);
        for j in 0..n {
            let k_lo = j.saturating_sub(hb);
            let mut d_j = f[j * w];
            for k in k_lo..j {
                let l_jk = f[k * w + (j - k)];
                d_j -= l_jk * l_jk * f[k * w];
            }
            if !d_j.is_finite() {
                return Err(Error::NonFinite { context: "LDLT pivot".into() });
            }
            if d_j.abs() <= tiny {
                return Err(Error::SingularTangent { pivot: j });
            }
            f[j * w] = d_j;
            for i in (j + 1)..(j + hb + 1).min(n) {
                let mut v = f[j * w + (i - j)];
                for k in i.saturating_sub(hb).max(k_lo)..j {
                    v -= f[k * w + (i - k)] * f[k * w + (j - k)] * f[k * w];
                }
                f[j * w + (i - j)] = v / d_j;
            }
        }
        Ok(LdltFactor { n, hb, f })
    }
}

/// LDL^T factor of a [`BandedSymmetric`] matrix.
#[derive(Debug, Clone)]
pub struct LdltFactor<T> {
    n: usize,
    hb: usize,
    f: Vec<T>,
}

impl<T: Real> LdltFactor<T> {
    /// Solve `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let w = self.hb + 1;
        let mut x = b.to_vec();
        // Forward: L y = b (unit lower triangular).
        for j in 0..self.n {
            let xj = x[j];
            for i in (j + 1)..(j + self.hb + 1).min(self.n) {
                let l_ij = self.f[j * w + (i - j)];
                x[i] = x[i] - l_ij * xj;
            }
        }
        // Diagonal: z = D^-1 y.
        for j in 0..self.n {
            x[j] = x[j] / self.f[j * w];
        }
        // Backward: L^T x = z.
        for j in (0..self.n).rev() {
            let mut xj = x[j];
            for i in (j + 1)..(j + self.hb + 1).min(self.n) {
                xj -= self.f[j * w + (i - j)] * x[i];
            }
            x[j] = xj;
        }
        x
    }

    /// Number of negative pivots in D, equal to the number of negative
    /// eigenvalues of the factored matrix by Sylvester's law of inertia.
    pub fn negative_pivots(&self) -> usize {
        let w = self.hb + 1;
        (0..self.n).filter(|&j| self.f[j * w] < T::zero()).count()
    }
}
