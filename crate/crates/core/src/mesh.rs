//! Axisymmetric meridian meshes.
//!
//! A membrane of revolution is discretized as a polyline of nodes `(r, z)`
//! in the meridian half-plane, each segment standing for a conical frustum
//! of shell. Displacement degrees of freedom live on the nodes; constraints
//! pin nodes to the symmetry axis or to the clamp.
//!
//! The volume swept by the meridian is evaluated with the frustum rule
//!
//! ```text
//! V = offset + sign * pi * sum_e (z_j - z_i)(r_i^2 + r_i r_j + r_j^2) / 3
//! ```
//!
//! which is the exact integral of `pi r(z)^2 dz` for a piecewise-linear
//! profile. For a chamber the meridian runs axis to clamp with `z` positive
//! outward, `sign = -1`, and the offset is the cylinder volume between the
//! clamp plane and the floor, so outward motion of the membrane grows the
//! enclosed volume. For a closed balloon the meridian runs pole to pole
//! with `sign = +1` and no offset.

use crate::error::{Error, Result};
use crate::geometry::ChamberGeometry;
use crate::linalg::BandedSymmetric;
use crate::scalar::{of, Real};

/// Kinematic constraint on a meridian node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeConstraint {
    /// Both coordinates free.
    Free,
    /// On the symmetry axis: radial coordinate pinned to zero, axial free.
    Axis,
    /// On the axis with the axial coordinate fixed too (anchors rigid-body
    /// translation of closed meshes).
    AxisPinned,
    /// Fully fixed at the clamp.
    Clamped,
}

impl NodeConstraint {
    fn dof_flags(self) -> [bool; 2] {
        match self {
            NodeConstraint::Free => [true, true],
            NodeConstraint::Axis => [false, true],
            NodeConstraint::AxisPinned | NodeConstraint::Clamped => [false, false],
        }
    }
}

/// Meridian mesh with its reference configuration and volume bookkeeping.
#[derive(Debug, Clone)]
pub struct MeridianMesh<T> {
    nodes: Vec<[T; 2]>,
    constraints: Vec<NodeConstraint>,
    thickness: Vec<T>,
    volume_sign: T,
    volume_offset_mm3: T,
    dof_map: Vec<[Option<usize>; 2]>,
    n_dofs: usize,
}

impl<T: Real> MeridianMesh<T> {
    pub fn from_profile(
        profile: Vec<[T; 2]>,
        constraints: Vec<NodeConstraint>,
        thickness_mm: T,
        volume_sign: T,
        volume_offset_mm3: T,
    ) -> Result<Self> {
        if profile.len() < 3 {
            return Err(Error::Mesh(format!("need at least 3 nodes, got {}", profile.len())));
        }
        if constraints.len() != profile.len() {
            return Err(Error::Mesh(format!(
                "{} constraints for {} nodes",
                constraints.len(),
                profile.len()
            )));
        }
        if !thickness_mm.is_finite() || thickness_mm <= T::zero() {
            return Err(Error::Mesh(format!("thickness must be positive, got {thickness_mm}")));
        }
        if volume_sign.abs() != T::one() {
            return Err(Error::Mesh("volume sign must be +1 or -1".into()));
        }
        for (i, (p, c)) in profile.iter().zip(&constraints).enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::NonFinite { context: format!("profile node {i}") });
            }
            let on_axis = matches!(c, NodeConstraint::Axis | NodeConstraint::AxisPinned);
            if on_axis && p[0] != T::zero() {
                return Err(Error::Mesh(format!("axis node {i} has radius {}", p[0])));
            }
            if !on_axis && p[0] <= T::zero() {
                return Err(Error::Mesh(format!("node {i} has non-positive radius {}", p[0])));
            }
        }
        for w in profile.windows(2) {
            let (dr, dz) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            if dr * dr + dz * dz == T::zero() {
                return Err(Error::Mesh("zero-length meridian element".into()));
            }
        }
        let thickness = vec![thickness_mm; profile.len() - 1];
        let mut dof_map = Vec::with_capacity(profile.len());
        let mut n_dofs = 0;
        for c in &constraints {
            let flags = c.dof_flags();
            let mut entry = [None, None];
            for (k, on) in flags.into_iter().enumerate() {
                if on {
                    entry[k] = Some(n_dofs);
                    n_dofs += 1;
                }
            }
            dof_map.push(entry);
        }
        if n_dofs == 0 {
            return Err(Error::Mesh("mesh has no free degrees of freedom".into()));
        }
        Ok(Self {
            nodes: profile,
            constraints,
            thickness,
            volume_sign,
            volume_offset_mm3,
            dof_map,
            n_dofs,
        })
    }

    /// Chamber membrane: axis node free to move axially, rim clamped, the
    /// cavity cylinder behind the clamp plane as the volume offset.
    pub fn chamber(geometry: &ChamberGeometry<T>, n_elements: usize) -> Result<Self> {
        let profile = geometry.meridian_profile(n_elements)?;
        let n = profile.len();
        let mut constraints = vec![NodeConstraint::Free; n];
        constraints[0] = NodeConstraint::Axis;
        constraints[n - 1] = NodeConstraint::Clamped;
        let offset = T::of(std::f64::consts::PI)
            * geometry.span_radius_mm()
            * geometry.span_radius_mm()
            * geometry.floor_depth_mm();
        Self::from_profile(
            profile,
            constraints,
            geometry.membrane_thickness_mm(),
            -T::one(),
            offset,
        )
    }

    /// Closed spherical balloon meshed pole to pole, south pole pinned.
    pub fn sphere(radius_mm: T, n_elements: usize, thickness_mm: T) -> Result<Self> {
        if n_elements < 3 {
            return Err(Error::Mesh(format!(
                "need at least 3 elements for a sphere, got {n_elements}"
            )));
        }
        if !radius_mm.is_finite() || radius_mm <= T::zero() {
            return Err(Error::Mesh(format!("sphere radius must be positive, got {radius_mm}")));
        }
        let n = n_elements;
        let mut profile = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let phi = of::<T>(std::f64::consts::PI * i as f64 / n as f64);
            let r = if i == 0 || i == n { T::zero() } else { radius_mm * phi.sin() };
            profile.push([r, radius_mm * (T::one() - phi.cos())]);
        }
        let mut constraints = vec![NodeConstraint::Free; n + 1];
        constraints[0] = NodeConstraint::AxisPinned;
        constraints[n] = NodeConstraint::Axis;
        Self::from_profile(profile, constraints, thickness_mm, T::one(), T::zero())
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn reference_positions(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn constraints(&self) -> &[NodeConstraint] {
        &self.constraints
    }

    pub fn element_thickness(&self) -> &[T] {
        &self.thickness
    }

    /// Per-node map from coordinate component (0 radial, 1 axial) to the
    /// global degree-of-freedom index, `None` where constrained.
    pub fn dof_map(&self) -> &[[Option<usize>; 2]] {
        &self.dof_map
    }

    /// Largest dof-index span inside any two-element stencil; the stiffness
    /// half-bandwidth (hinges couple three consecutive nodes).
    pub fn half_bandwidth(&self) -> usize {
        let mut hb = 0;
        for i in 0..self.n_nodes() {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(self.n_nodes() - 1);
            let dofs: Vec<usize> =
                (lo..=hi).flat_map(|n| self.dof_map[n].iter().flatten().copied()).collect();
            if let (Some(&min), Some(&max)) = (dofs.iter().min(), dofs.iter().max()) {
                hb = hb.max(max - min);
            }
        }
        hb
    }

    /// Current node positions for a displacement vector `u` over the free
    /// dofs (zero displacement reproduces the reference configuration).
    pub fn positions(&self, u: &[T]) -> Vec<[T; 2]> {
        assert_eq!(u.len(), self.n_dofs);
        let mut pos = self.nodes.clone();
        for (node, map) in self.dof_map.iter().enumerate() {
            for (k, dof) in map.iter().enumerate() {
                if let Some(d) = dof {
                    pos[node][k] += u[*d];
                }
            }
        }
        pos
    }

    /// Enclosed volume (mm^3) at the given node positions.
    pub fn enclosed_volume(&self, positions: &[[T; 2]]) -> T {
        let third_pi = T::of(std::f64::consts::PI / 3.0);
        let mut sum = T::zero();
        for w in positions.windows(2) {
            let ([ri, zi], [rj, zj]) = (w[0], w[1]);
            sum += (zj - zi) * (ri * ri + ri * rj + rj * rj);
        }
        self.volume_offset_mm3 + self.volume_sign * third_pi * sum
    }

    /// Gradient of the enclosed volume with respect to the free dofs (mm^2).
    pub fn volume_gradient(&self, positions: &[[T; 2]]) -> Vec<T> {
        let third_pi = T::of(std::f64::consts::PI / 3.0);
        let s = self.volume_sign * third_pi;
        let two = of::<T>(2.0);
        let mut grad = vec![T::zero(); self.n_dofs];
        let mut add = |node: usize, comp: usize, v: T| {
            if let Some(d) = self.dof_map[node][comp] {
                grad[d] += v;
            }
        };
        for (e, w) in positions.windows(2).enumerate() {
            let ([ri, zi], [rj, zj]) = (w[0], w[1]);
            let dz = zj - zi;
            let q = ri * ri + ri * rj + rj * rj;
            add(e, 0, s * dz * (two * ri + rj));
            add(e + 1, 0, s * dz * (ri + two * rj));
            add(e, 1, -s * q);
            add(e + 1, 1, s * q);
        }
        grad
    }

    /// Accumulate `scale * d2V/du2` into a banded matrix over the free dofs.
    pub fn add_scaled_volume_hessian(
        &self,
        positions: &[[T; 2]],
        scale: T,
        k: &mut BandedSymmetric<T>,
    ) {
        let third_pi = T::of(std::f64::consts::PI / 3.0);
        let s = self.volume_sign * third_pi * scale;
        let two = of::<T>(2.0);
        for (e, w) in positions.windows(2).enumerate() {
            let ([ri, _zi], [rj, _zj]) = (w[0], w[1]);
            let dz = w[1][1] - w[0][1];
            // Local coordinate order: (r_i, z_i, r_j, z_j).
            let local: [[T; 4]; 4] = {
                let a = s * two * dz;
                let b = s * dz;
                let gi = s * (two * ri + rj);
                let gj = s * (ri + two * rj);
                [
                    [a, -gi, b, gi],
                    [-gi, T::zero(), -gj, T::zero()],
                    [b, -gj, a, gj],
                    [gi, T::zero(), gj, T::zero()],
                ]
            };
            let dofs = [
                self.dof_map[e][0],
                self.dof_map[e][1],
                self.dof_map[e + 1][0],
                self.dof_map[e + 1][1],
            ];
            for (a, da) in dofs.iter().enumerate() {
                let Some(da) = da else { continue };
                for (b, db) in dofs.iter().enumerate().skip(a) {
                    let Some(db) = db else { continue };
                    // Upper triangle only; diagonal once.
                    if db >= da {
                        k.add(*da, *db, local[a][b]);
                    } else {
                        k.add(*db, *da, local[a][b]);
                    }
                }
            }
        }
    }

    /// Reject configurations whose meridian crosses itself or leaves the
    /// half-plane `r >= 0`.
    pub fn check_valid_configuration(&self, positions: &[[T; 2]]) -> Result<()> {
        for (i, p) in positions.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::NonFinite { context: format!("node {i} position") });
            }
            if p[0] < T::zero() {
                return Err(Error::Mesh(format!("node {i} crossed the axis (r = {})", p[0])));
            }
        }
        let n = positions.len() - 1;
        for i in 0..n {
            for j in (i + 2)..n {
                if segments_cross(
                    positions[i],
                    positions[i + 1],
                    positions[j],
                    positions[j + 1],
                ) {
                    return Err(Error::SelfIntersecting(i, j));
                }
            }
        }
        Ok(())
    }
}

/// Proper crossing test between segments `ab` and `cd` via orientation
/// signs; collinear overlap counts as a crossing.
fn segments_cross<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2], d: [T; 2]) -> bool {
    let orient = |p: [T; 2], q: [T; 2], r: [T; 2]| -> T {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let on_segment = |p: [T; 2], q: [T; 2], r: [T; 2]| -> bool {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if ((o1 > T::zero()) != (o2 > T::zero()))
        && ((o3 > T::zero()) != (o4 > T::zero()))
        && o1 != T::zero()
        && o2 != T::zero()
        && o3 != T::zero()
        && o4 != T::zero()
    {
        return true;
    }
    (o1 == T::zero() && on_segment(a, b, c))
        || (o2 == T::zero() && on_segment(a, b, d))
        || (o3 == T::zero() && on_segment(c, d, a))
        || (o4 == T::zero() && on_segment(c, d, b))
}
