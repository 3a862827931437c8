//! Nearly incompressible Neo-Hookean material model and the silicone catalog.
//!
//! The strain-energy density is
//!
//! ```text
//! W(I1, J) = C10 * (I1 * J^(-2/3) - 3) + D1 * (J - 1)^2      [MPa]
//! ```
//!
//! with `I1` the first invariant of the left Cauchy-Green tensor and `J` the
//! volume ratio. `d1 = 0` encodes exact incompressibility: the volumetric
//! term is dropped and `J = 1` is enforced kinematically by the membrane
//! reduction (`lambda_3 = 1 / (lambda_m * lambda_c)`).

use crate::error::{Error, Result};
use crate::scalar::{of, Real};
use std::collections::BTreeMap;

/// Neo-Hookean parameters. Units: `c10_mpa`, `d1_per_mpa` in MPa-based units,
/// `density_kg_m3` in kg/m^3 (informational; the quasi-static models never
/// read it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams<T> {
    pub c10_mpa: T,
    pub d1_per_mpa: T,
    pub density_kg_m3: T,
}

impl<T: Real> MaterialParams<T> {
    pub fn new(c10_mpa: T, d1_per_mpa: T, density_kg_m3: T) -> Result<Self> {
        if !c10_mpa.is_finite() || !d1_per_mpa.is_finite() || !density_kg_m3.is_finite() {
            return Err(Error::NonFinite { context: "material parameters".into() });
        }
        if c10_mpa <= T::zero() {
            return Err(Error::Material(format!("c10 must be positive, got {c10_mpa}")));
        }
        if d1_per_mpa < T::zero() {
            return Err(Error::Material(format!("d1 must be non-negative, got {d1_per_mpa}")));
        }
        if density_kg_m3 <= T::zero() {
            return Err(Error::Material(format!(
                "density must be positive, got {density_kg_m3}"
            )));
        }
        Ok(Self { c10_mpa, d1_per_mpa, density_kg_m3 })
    }

    /// Incompressible entry (`d1 = 0`), the form used by every chamber model.
    pub fn incompressible(c10_mpa: T, density_kg_m3: T) -> Result<Self> {
        Self::new(c10_mpa, T::zero(), density_kg_m3)
    }

    /// True when the volumetric penalty is absent.
    pub fn is_incompressible(&self) -> bool {
        self.d1_per_mpa == T::zero()
    }

    /// Same material with `c10` multiplied by `factor`. Pressures on any
    /// equilibrium path scale by the same factor; limit-point volumes do not
    /// move (the membrane model is linear in `c10`).
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.c10_mpa * factor, self.d1_per_mpa * factor, self.density_kg_m3)
    }
}

/// Isochoric-attainable deformation invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationInvariants<T> {
    i1: T,
    j: T,
}

impl<T: Real> DeformationInvariants<T> {
    /// Validates `j > 0` and attainability `i1 >= 3 * j^(2/3)` (equality at a
    /// pure dilatation), with a small relative slack for round-off.
    pub fn new(i1: T, j: T) -> Result<Self> {
        if !i1.is_finite() || !j.is_finite() {
            return Err(Error::NonFinite { context: "deformation invariants".into() });
        }
        if j <= T::zero() {
            return Err(Error::Material(format!("volume ratio must be positive, got {j}")));
        }
        let floor = of::<T>(3.0) * j.powf(of(2.0 / 3.0));
        let slack = of::<T>(1e-9) * floor.max(T::one());
        if i1 + slack < floor {
            return Err(Error::Material(format!(
                "unattainable invariants: i1 = {i1} below 3 * j^(2/3) = {floor}"
            )));
        }
        Ok(Self { i1, j })
    }

    pub fn from_principal_stretches(l1: T, l2: T, l3: T) -> Result<Self> {
        if l1 <= T::zero() || l2 <= T::zero() || l3 <= T::zero() {
            return Err(Error::Material("principal stretches must be positive".into()));
        }
        Self::new(l1 * l1 + l2 * l2 + l3 * l3, l1 * l2 * l3)
    }

    pub fn i1(&self) -> T {
        self.i1
    }

    pub fn j(&self) -> T {
        self.j
    }
}

/// Strain-energy density in MPa.
pub fn strain_energy<T: Real>(m: &MaterialParams<T>, inv: &DeformationInvariants<T>) -> Result<T> {
    let jm23 = inv.j.powf(of(-2.0 / 3.0));
    let dev = m.c10_mpa * (inv.i1 * jm23 - of(3.0));
    let jm1 = inv.j - T::one();
    let vol = m.d1_per_mpa * jm1 * jm1;
    let w = dev + vol;
    if !w.is_finite() {
        return Err(Error::NonFinite { context: "strain energy".into() });
    }
    // Round-off at near-identity states can leave a tiny negative deviatoric part.
    Ok(if w < T::zero() && w > of(-1e-12) { T::zero() } else { w })
}

/// In-plane membrane tensions (force per unit deformed length, N/mm) of an
/// incompressible sheet with reference thickness `h0_mm`, under principal
/// stretches `lambda_m` (meridional) and `lambda_c` (circumferential).
///
/// The through-thickness stretch is `lambda_3 = 1 / (lambda_m * lambda_c)`;
/// principal Cauchy stresses are `sigma_i = 2 * c10 * (lambda_i^2 -
/// lambda_3^2)` and tensions follow as `T_i = sigma_i * h0 * lambda_3`.
pub fn membrane_tensions<T: Real>(
    m: &MaterialParams<T>,
    lambda_m: T,
    lambda_c: T,
    h0_mm: T,
) -> Result<(T, T)> {
    if !m.is_incompressible() {
        return Err(Error::Material(
            "membrane tensions require an incompressible material (d1 = 0)".into(),
        ));
    }
    if lambda_m <= T::zero() || lambda_c <= T::zero() {
        return Err(Error::Material("membrane stretches must be positive".into()));
    }
    if h0_mm <= T::zero() {
        return Err(Error::Material("membrane thickness must be positive".into()));
    }
    let l3 = T::one() / (lambda_m * lambda_c);
    let two_c10 = of::<T>(2.0) * m.c10_mpa;
    let sig_m = two_c10 * (lambda_m * lambda_m - l3 * l3);
    let sig_c = two_c10 * (lambda_c * lambda_c - l3 * l3);
    let tm = sig_m * h0_mm * l3;
    let tc = sig_c * h0_mm * l3;
    if !tm.is_finite() || !tc.is_finite() {
        return Err(Error::NonFinite { context: "membrane tensions".into() });
    }
    Ok((tm, tc))
}

/// Catalog entry; `uncalibrated` marks placeholder constants that only
/// preserve the stiffness ordering of the named product line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogEntry<T> {
    pub params: MaterialParams<T>,
    pub uncalibrated: bool,
}

/// Named material catalog.
#[derive(Debug, Clone)]
pub struct Catalog<T> {
    entries: BTreeMap<String, CatalogEntry<T>>,
}

impl<T: Real> Catalog<T> {
    /// Built-in entries. The three structural silicones carry published
    /// constants; the softer block materials are uncalibrated placeholders
    /// ordered by nominal hardness.
    pub fn builtin() -> Self {
        let mut entries = BTreeMap::new();
        let mut put = |name: &str, c10: f64, density: f64, uncalibrated: bool| {
            entries.insert(
                name.to_string(),
                CatalogEntry {
                    params: MaterialParams::incompressible(of::<T>(c10), of::<T>(density))
                        .expect("builtin entry is valid"),
                    uncalibrated,
                },
            );
        };
        put("ecoflex-gel-2", 0.002, 980.0, true);
        put("ecoflex-00-10", 0.0055, 1040.0, true);
        put("ecoflex-00-30", 0.0115, 1070.0, false);
        put("dragon-skin-00-20", 0.055, 1080.0, true);
        put("dragon-skin-00-30", 0.1, 1080.0, false);
        put("sil950", 0.4, 1160.0, false);
        Self { entries }
    }

    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: &str, entry: CatalogEntry<T>) {
        self.entries.insert(name.to_string(), entry);
    }

    pub fn get(&self, name: &str) -> Result<&CatalogEntry<T>> {
        self.entries.get(name).ok_or_else(|| Error::UnknownMaterial {
            name: name.to_string(),
            available: self.names(),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &CatalogEntry<T>)> {
        self.entries.iter()
    }
}
