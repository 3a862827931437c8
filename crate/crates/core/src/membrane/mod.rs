//! Discrete axisymmetric membrane model with meridional bending.
//!
//! Each meridian element is a conical frustum of incompressible
//! neo-Hookean sheet. With `lambda_s = l / L0` the meridional stretch and
//! `lambda_t = r_mid / R0_mid` the hoop stretch at the element midpoint,
//! membrane incompressibility fixes the thickness stretch to
//! `1 / (lambda_s lambda_t)` and the element energy is
//!
//! ```text
//! E_e = c10 h0 (2 pi R0_mid L0) (lambda_s^2 + lambda_t^2
//!       + lambda_s^-2 lambda_t^-2 - 3)
//! ```
//!
//! Walls here are thick enough relative to the span that meridional
//! bending matters: without it a tilted membrane everts freely through the
//! mirror state and every tilt angle would snap, which is not what such
//! chambers do. Bending enters as hinge springs at the nodes. With plate
//! modulus `D = (2/3) c10 h^3` (the incompressible small-strain modulus is
//! `E = 6 c10`) a node whose rest radius is `r0` and whose attributed
//! meridian length is `lbar` carries
//!
//! ```text
//! E_hinge = kappa / 2 (psi - psi0)^2,   kappa = 2 pi D r0 / lbar
//! ```
//!
//! where `psi` is the turn angle between adjacent elements and `psi0` its
//! stress-free value, so the cast crease between cap and annulus is energy
//! free. At a crease (a node whose reference profile already turns) the
//! attributed length is the wall thickness rather than the mesh spacing:
//! the fold zone of a thick cast wall spans about one thickness however
//! finely the meridian is meshed, and using the mesh spacing there would
//! make the crease stiffer without bound under refinement. The clamped rim
//! also anchors the meridian tangent through an end hinge against the rest
//! direction. Nodes on the axis span a ring of zero circumference and get
//! no hinge; their neighbourhood still resists bending through the
//! adjacent nodes. Hoop-bending changes are neglected.
//!
//! Pressure work uses the mesh volume: the residual of an equilibrium
//! state `u` at chamber pressure `p` (kPa) is `grad E(u) - p/1000 grad
//! V(u)` in newtons, megapascals being the native stress unit.
//!
//! Two chamber-level closures are available on top of the bare membrane.
//! An effective bending thickness can replace the cast thickness inside
//! the plate modulus: a molded wall bends more easily than a homogeneous
//! plate of its nominal section (shear compliance, casting variation),
//! and the reduced-order hinge chain otherwise overweights bending
//! against stretching. The membrane (stretching) stiffness always keeps
//! the cast thickness, which is what sets the pressure scale. Separately,
//! a body compliance adds the linearized swell of the non-membrane
//! chamber body (floor plate and side wall of the same cast) to every
//! reported cavity volume as `C p`. The body does not load the membrane,
//! so equilibrium states and their stability are unchanged; only the
//! volume bookkeeping shifts. That shift is what folds the total volume
//! back during a snap: while pressure falls along the unstable branch the
//! body recoils faster than the everting membrane gains volume.

use crate::error::{Error, Result};
use crate::linalg::BandedSymmetric;
use crate::materials::MaterialParams;
use crate::mesh::{MeridianMesh, NodeConstraint};
use crate::scalar::{of, Real};

pub mod continuation;

#[derive(Debug, Clone, Copy)]
struct ElementRef<T> {
    l0: T,
    r0_mid: T,
    /// `c10 h0 2 pi R0_mid L0`, the energy scale of the element.
    coef: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum HingeKind {
    /// Turn angle between elements `(node-1, node)` and `(node, node+1)`.
    Interior,
    /// Direction of the final element against its rest direction; the far
    /// node is clamped.
    ClampEnd,
}

#[derive(Debug, Clone, Copy)]
struct Hinge<T> {
    node: usize,
    kind: HingeKind,
    kappa: T,
    psi0: T,
}

/// Membrane plus bending model over a meridian mesh.
#[derive(Debug, Clone)]
pub struct MembraneModel<T> {
    mesh: MeridianMesh<T>,
    material: MaterialParams<T>,
    elements: Vec<ElementRef<T>>,
    hinges: Vec<Hinge<T>>,
    body_compliance_mm3_per_kpa: T,
}

fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = of::<T>(2.0 * std::f64::consts::PI);
    let pi = of::<T>(std::f64::consts::PI);
    let mut t = (x + pi) % two_pi;
    if t < T::zero() {
        t += two_pi;
    }
    t - pi
}

fn turn_angle<T: Real>(p_prev: [T; 2], p: [T; 2], p_next: [T; 2]) -> T {
    let d1 = [p[0] - p_prev[0], p[1] - p_prev[1]];
    let d2 = [p_next[0] - p[0], p_next[1] - p[1]];
    let cross = d1[0] * d2[1] - d1[1] * d2[0];
    let dot = d1[0] * d2[0] + d1[1] * d2[1];
    cross.atan2(dot)
}

impl<T: Real> MembraneModel<T> {
    /// Plain membrane-plus-bending model: bending uses the wall thickness
    /// itself and the chamber body is treated as rigid.
    pub fn new(mesh: MeridianMesh<T>, material: MaterialParams<T>) -> Result<Self> {
        Self::with_closures(mesh, material, None, T::zero())
    }

    /// Model with the chamber closures: `bending_thickness_mm` replaces the
    /// wall thickness inside the plate modulus only (membrane stiffness
    /// keeps the cast thickness), and `body_compliance_mm3_per_kpa` adds the
    /// linearized swell of the non-membrane chamber body to every reported
    /// cavity volume.
    pub fn with_closures(
        mesh: MeridianMesh<T>,
        material: MaterialParams<T>,
        bending_thickness_mm: Option<T>,
        body_compliance_mm3_per_kpa: T,
    ) -> Result<Self> {
        if !material.is_incompressible() {
            return Err(Error::Material(
                "membrane model requires an incompressible material (d1 = 0)".into(),
            ));
        }
        if let Some(hb) = bending_thickness_mm {
            if hb <= T::zero() || !hb.is_finite() {
                return Err(Error::Material("bending thickness must be positive".into()));
            }
        }
        if body_compliance_mm3_per_kpa < T::zero() || !body_compliance_mm3_per_kpa.is_finite() {
            return Err(Error::Material("body compliance must be non-negative".into()));
        }
        let half = of::<T>(0.5);
        let two_pi = of::<T>(2.0 * std::f64::consts::PI);
        let nodes = mesh.reference_positions();
        let mut elements = Vec::with_capacity(mesh.n_elements());
        for (e, w) in nodes.windows(2).enumerate() {
            let (dr, dz) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            let l0 = (dr * dr + dz * dz).sqrt();
            let r0_mid = (w[0][0] + w[1][0]) * half;
            if r0_mid <= T::zero() {
                return Err(Error::Mesh(format!("element {e} has zero reference radius")));
            }
            let coef = material.c10_mpa * mesh.element_thickness()[e] * two_pi * r0_mid * l0;
            elements.push(ElementRef { l0, r0_mid, coef });
        }

        let mut hinges = Vec::new();
        let d_coef = of::<T>(2.0 / 3.0) * material.c10_mpa;
        let n = mesh.n_nodes();
        for j in 1..n - 1 {
            let r0 = nodes[j][0];
            if r0 <= T::zero() {
                continue;
            }
            let lbar = (elements[j - 1].l0 + elements[j].l0) * half;
            let h = (mesh.element_thickness()[j - 1] + mesh.element_thickness()[j]) * half;
            let hb = bending_thickness_mm.unwrap_or(h);
            let psi0 = turn_angle(nodes[j - 1], nodes[j], nodes[j + 1]);
            // A node where the cast profile itself turns is a crease. Its
            // fold zone in the real part spans about one wall thickness
            // regardless of mesh spacing, so the crease hinge takes `h` as
            // its bending length. Smooth nodes keep the attributed mesh
            // length `lbar`, which recovers distributed plate bending under
            // refinement; tying a finite rest turn to `lbar` instead would
            // stiffen without bound as the mesh is refined.
            let fold_zone = if psi0.abs() > of::<T>(1e-3) { h } else { lbar };
            let kappa = two_pi * d_coef * hb * hb * hb * r0 / fold_zone;
            hinges.push(Hinge { node: j, kind: HingeKind::Interior, kappa, psi0 });
        }
        if mesh.constraints()[n - 1] == NodeConstraint::Clamped {
            let r0 = nodes[n - 1][0];
            let h = mesh.element_thickness()[n - 2];
            let hb = bending_thickness_mm.unwrap_or(h);
            // The rim hinge carries a finite rotation once the membrane
            // everts, so like a crease it folds over roughly one wall
            // thickness; attributing the mesh spacing here would make the
            // everted state's rim energy grow without bound under
            // refinement.
            let kappa = two_pi * d_coef * hb * hb * hb * r0 / h;
            let d = [nodes[n - 1][0] - nodes[n - 2][0], nodes[n - 1][1] - nodes[n - 2][1]];
            let psi0 = d[1].atan2(d[0]);
            hinges.push(Hinge { node: n - 1, kind: HingeKind::ClampEnd, kappa, psi0 });
        }
        Ok(Self { mesh, material, elements, hinges, body_compliance_mm3_per_kpa })
    }

    /// Linearized swell of the non-membrane chamber body per unit pressure.
    pub fn body_compliance_mm3_per_kpa(&self) -> T {
        self.body_compliance_mm3_per_kpa
    }

    /// Total cavity volume at node positions `u` under pressure `p`:
    /// the membrane-bounded volume plus the body swell `C p`.
    pub fn total_volume(&self, u: &[T], p_kpa: T) -> T {
        self.volume(u) + self.body_compliance_mm3_per_kpa * p_kpa
    }

    pub fn mesh(&self) -> &MeridianMesh<T> {
        &self.mesh
    }

    pub fn material(&self) -> &MaterialParams<T> {
        &self.material
    }

    /// Force scale (N) used for relative residual tolerances: material
    /// stiffness times mean thickness times mean circumference.
    pub fn characteristic_force(&self) -> T {
        let n = of::<T>(self.elements.len() as f64);
        let h: T = self.mesh.element_thickness().iter().copied().sum::<T>() / n;
        let r: T = self.elements.iter().map(|e| e.r0_mid).sum::<T>() / n;
        self.material.c10_mpa * h * of::<T>(2.0 * std::f64::consts::PI) * r
    }

    fn element_stretches(&self, e: usize, pi: [T; 2], pj: [T; 2]) -> Result<(T, T)> {
        let el = &self.elements[e];
        let (dr, dz) = (pj[0] - pi[0], pj[1] - pi[1]);
        let l = (dr * dr + dz * dz).sqrt();
        let r_mid = (pi[0] + pj[0]) * of(0.5);
        let floor = of::<T>(1e-6);
        if l <= el.l0 * floor || r_mid <= el.r0_mid * floor {
            return Err(Error::Mesh(format!("element {e} degenerated during deformation")));
        }
        Ok((l / el.l0, r_mid / el.r0_mid))
    }

    /// Total elastic energy (N mm) at the given node positions.
    pub fn elastic_energy(&self, positions: &[[T; 2]]) -> Result<T> {
        let three = of::<T>(3.0);
        let mut energy = T::zero();
        for e in 0..self.elements.len() {
            let (ls, lt) = self.element_stretches(e, positions[e], positions[e + 1])?;
            let inv = T::one() / (ls * ls * lt * lt);
            energy += self.elements[e].coef * (ls * ls + lt * lt + inv - three);
        }
        let half = of::<T>(0.5);
        for hinge in &self.hinges {
            let psi = self.hinge_angle(hinge, positions);
            let d = wrap_angle(psi - hinge.psi0);
            energy += half * hinge.kappa * d * d;
        }
        if !energy.is_finite() {
            return Err(Error::NonFinite { context: "elastic energy".into() });
        }
        Ok(energy)
    }

    /// Scratch diagnostic, removed before release: (membrane, crease
    /// hinges, smooth hinges, end hinge) energies.
    #[doc(hidden)]
    pub fn energy_parts(&self, positions: &[[T; 2]]) -> Result<[T; 4]> {
        let three = of::<T>(3.0);
        let mut parts = [T::zero(); 4];
        for e in 0..self.elements.len() {
            let (ls, lt) = self.element_stretches(e, positions[e], positions[e + 1])?;
            let inv = T::one() / (ls * ls * lt * lt);
            parts[0] += self.elements[e].coef * (ls * ls + lt * lt + inv - three);
        }
        let half = of::<T>(0.5);
        for hinge in &self.hinges {
            let psi = self.hinge_angle(hinge, positions);
            let d = wrap_angle(psi - hinge.psi0);
            let e = half * hinge.kappa * d * d;
            let slot = match hinge.kind {
                HingeKind::ClampEnd => 3,
                HingeKind::Interior if hinge.psi0.abs() > of::<T>(1e-3) => 1,
                HingeKind::Interior => 2,
            };
            parts[slot] += e;
        }
        Ok(parts)
    }

    fn hinge_angle(&self, hinge: &Hinge<T>, positions: &[[T; 2]]) -> T {
        match hinge.kind {
            HingeKind::Interior => turn_angle(
                positions[hinge.node - 1],
                positions[hinge.node],
                positions[hinge.node + 1],
            ),
            HingeKind::ClampEnd => {
                let (a, b) = (positions[hinge.node - 1], positions[hinge.node]);
                (b[1] - a[1]).atan2(b[0] - a[0])
            }
        }
    }

    /// Gradient of the elastic energy over the free dofs (N).
    pub fn elastic_gradient(&self, positions: &[[T; 2]]) -> Result<Vec<T>> {
        let mut grad = vec![T::zero(); self.mesh.n_dofs()];
        let dof_map = self.mesh.dof_map();
        for e in 0..self.elements.len() {
            let local = self.element_gradient(e, positions[e], positions[e + 1])?;
            let dofs = [dof_map[e][0], dof_map[e][1], dof_map[e + 1][0], dof_map[e + 1][1]];
            for (g, d) in local.into_iter().zip(dofs) {
                if let Some(d) = d {
                    grad[d] += g;
                }
            }
        }
        for hinge in &self.hinges {
            self.scatter_hinge_gradient(hinge, positions, &mut grad);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { context: "elastic gradient".into() });
        }
        Ok(grad)
    }

    /// Local energy gradient of element `e` wrt `(r_i, z_i, r_j, z_j)`.
    fn element_gradient(&self, e: usize, pi: [T; 2], pj: [T; 2]) -> Result<[T; 4]> {
        let el = &self.elements[e];
        let (ls, lt) = self.element_stretches(e, pi, pj)?;
        let two = of::<T>(2.0);
        let half = of::<T>(0.5);
        // dW/d(lambda_s) and dW/d(lambda_t) for W = ls^2 + lt^2 + (ls lt)^-2 - 3.
        let inv = T::one() / (ls * ls * lt * lt);
        let dw_ds = two * ls - two * inv / ls;
        let dw_dt = two * lt - two * inv / lt;
        let (dr, dz) = (pj[0] - pi[0], pj[1] - pi[1]);
        let l = (dr * dr + dz * dz).sqrt();
        // d(lambda_s)/dx = d(l)/dx / L0; d(lambda_t)/dr = 1/(2 R0_mid).
        let cs = self.elements[e].coef * dw_ds / (el.l0 * l);
        let ct = self.elements[e].coef * dw_dt * half / el.r0_mid;
        Ok([
            -cs * dr + ct,
            -cs * dz,
            cs * dr + ct,
            cs * dz,
        ])
    }

    fn hinge_gradient(&self, hinge: &Hinge<T>, positions: &[[T; 2]]) -> ([T; 6], usize) {
        let psi = self.hinge_angle(hinge, positions);
        let moment = hinge.kappa * wrap_angle(psi - hinge.psi0);
        match hinge.kind {
            HingeKind::Interior => {
                let (pa, pb, pc) = (
                    positions[hinge.node - 1],
                    positions[hinge.node],
                    positions[hinge.node + 1],
                );
                let d1 = [pb[0] - pa[0], pb[1] - pa[1]];
                let d2 = [pc[0] - pb[0], pc[1] - pb[1]];
                let cross = d1[0] * d2[1] - d1[1] * d2[0];
                let dot = d1[0] * d2[0] + d1[1] * d2[1];
                let denom = cross * cross + dot * dot;
                // psi = atan2(cross, dot):
                // dpsi/dq = (dot dcross/dq - cross ddot/dq) / denom.
                let dpsi_d1 = [
                    (dot * d2[1] - cross * d2[0]) / denom,
                    (dot * -d2[0] - cross * d2[1]) / denom,
                ];
                let dpsi_d2 = [
                    (dot * -d1[1] - cross * d1[0]) / denom,
                    (dot * d1[0] - cross * d1[1]) / denom,
                ];
                (
                    [
                        -moment * dpsi_d1[0],
                        -moment * dpsi_d1[1],
                        moment * (dpsi_d1[0] - dpsi_d2[0]),
                        moment * (dpsi_d1[1] - dpsi_d2[1]),
                        moment * dpsi_d2[0],
                        moment * dpsi_d2[1],
                    ],
                    hinge.node - 1,
                )
            }
            HingeKind::ClampEnd => {
                let (pa, pb) = (positions[hinge.node - 1], positions[hinge.node]);
                let d = [pb[0] - pa[0], pb[1] - pa[1]];
                let den = d[0] * d[0] + d[1] * d[1];
                let dphi = [-d[1] / den, d[0] / den];
                (
                    [
                        -moment * dphi[0],
                        -moment * dphi[1],
                        moment * dphi[0],
                        moment * dphi[1],
                        T::zero(),
                        T::zero(),
                    ],
                    hinge.node - 1,
                )
            }
        }
    }

    fn scatter_hinge_gradient(&self, hinge: &Hinge<T>, positions: &[[T; 2]], grad: &mut [T]) {
        let (local, first_node) = self.hinge_gradient(hinge, positions);
        let dof_map = self.mesh.dof_map();
        for (k, g) in local.into_iter().enumerate() {
            let node = first_node + k / 2;
            if node >= dof_map.len() {
                continue;
            }
            if let Some(d) = dof_map[node][k % 2] {
                grad[d] += g;
            }
        }
    }

    /// Equilibrium residual (N) at displacement `u` and pressure `p_kpa`:
    /// `grad E - p/1000 grad V`.
    pub fn residual(&self, u: &[T], p_kpa: T) -> Result<Vec<T>> {
        let positions = self.mesh.positions(u);
        self.mesh.check_valid_configuration(&positions)?;
        let mut r = self.elastic_gradient(&positions)?;
        let scale = p_kpa * of(1e-3);
        for (ri, vi) in r.iter_mut().zip(self.mesh.volume_gradient(&positions)) {
            *ri -= scale * vi;
        }
        Ok(r)
    }

    /// Enclosed volume at displacement `u` (mm^3).
    pub fn volume(&self, u: &[T]) -> T {
        self.mesh.enclosed_volume(&self.mesh.positions(u))
    }

    /// Volume gradient over the free dofs at displacement `u` (mm^2).
    pub fn volume_gradient(&self, u: &[T]) -> Vec<T> {
        self.mesh.volume_gradient(&self.mesh.positions(u))
    }

    /// Assemble the tangent stiffness `d(residual)/du` into `k`. Elastic
    /// blocks come from central differences of the analytic local
    /// gradients; the pressure block is the analytic volume Hessian.
    pub fn tangent_stiffness(
        &self,
        u: &[T],
        p_kpa: T,
        k: &mut BandedSymmetric<T>,
    ) -> Result<()> {
        assert_eq!(k.n(), self.mesh.n_dofs());
        k.fill_zero();
        let positions = self.mesh.positions(u);
        let dof_map = self.mesh.dof_map();
        let step = of::<T>(f64::EPSILON.cbrt());

        // Membrane elements: 4x4 local blocks.
        for e in 0..self.elements.len() {
            let base = [
                positions[e][0],
                positions[e][1],
                positions[e + 1][0],
                positions[e + 1][1],
            ];
            let dofs = [dof_map[e][0], dof_map[e][1], dof_map[e + 1][0], dof_map[e + 1][1]];
            let grad_at = |x: [T; 4]| -> Result<[T; 4]> {
                self.element_gradient(e, [x[0], x[1]], [x[2], x[3]])
            };
            let mut local = [[T::zero(); 4]; 4];
            for b in 0..4 {
                if dofs[b].is_none() {
                    continue;
                }
                let h = step * (T::one() + base[b].abs());
                let mut xp = base;
                let mut xm = base;
                xp[b] += h;
                xm[b] -= h;
                let (gp, gm) = (grad_at(xp)?, grad_at(xm)?);
                for a in 0..4 {
                    local[a][b] = (gp[a] - gm[a]) / (h + h);
                }
            }
            scatter_symmetrized(&local, &dofs, k);
        }

        // Hinges: 6x6 local blocks over three consecutive nodes (the clamp
        // end hinge leaves its trailing columns zero).
        for hinge in &self.hinges {
            let first = hinge.node - 1;
            let span = match hinge.kind {
                HingeKind::Interior => 3,
                HingeKind::ClampEnd => 2,
            };
            let mut base = [T::zero(); 6];
            let mut dofs = [None; 6];
            for n in 0..span {
                base[2 * n] = positions[first + n][0];
                base[2 * n + 1] = positions[first + n][1];
                dofs[2 * n] = dof_map[first + n][0];
                dofs[2 * n + 1] = dof_map[first + n][1];
            }
            let mut local = [[T::zero(); 6]; 6];
            for b in 0..2 * span {
                if dofs[b].is_none() {
                    continue;
                }
                let h = step * (T::one() + base[b].abs());
                let mut pp = positions.clone();
                let mut pm = positions.clone();
                let (node, comp) = (first + b / 2, b % 2);
                pp[node][comp] += h;
                pm[node][comp] -= h;
                let (gp, _) = self.hinge_gradient(hinge, &pp);
                let (gm, _) = self.hinge_gradient(hinge, &pm);
                for a in 0..2 * span {
                    local[a][b] = (gp[a] - gm[a]) / (h + h);
                }
            }
            scatter_symmetrized(&local, &dofs, k);
        }

        self.mesh.add_scaled_volume_hessian(&positions, -p_kpa * of(1e-3), k);
        Ok(())
    }
}

/// Scatter `(local + local^T) / 2` into the global banded matrix.
fn scatter_symmetrized<T: Real, const N: usize>(
    local: &[[T; N]; N],
    dofs: &[Option<usize>; N],
    k: &mut BandedSymmetric<T>,
) {
    let half = of::<T>(0.5);
    for a in 0..N {
        let Some(da) = dofs[a] else { continue };
        for b in a..N {
            let Some(db) = dofs[b] else { continue };
            let v = (local[a][b] + local[b][a]) * half;
            if da <= db {
                k.add(da, db, v);
            } else {
                k.add(db, da, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChamberGeometry;
    use crate::materials::{Catalog, MaterialParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chamber_model(tilt: f64, n: usize) -> MembraneModel<f64> {
        let geo = ChamberGeometry::gripping(tilt);
        let mesh = MeridianMesh::chamber(&geo, n).unwrap();
        let params = Catalog::builtin().get("ecoflex-00-30").unwrap().params;
        MembraneModel::new(mesh, params).unwrap()
    }

    #[test]
    fn rest_state_is_stress_free() {
        let model = chamber_model(45.0, 32);
        let u = vec![0.0; model.mesh().n_dofs()];
        let positions = model.mesh().positions(&u);
        assert_eq!(model.elastic_energy(&positions).unwrap(), 0.0);
        let r = model.residual(&u, 0.0).unwrap();
        let max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-14, "rest residual {max}");
    }

    #[test]
    fn compressible_material_rejected() {
        let geo = ChamberGeometry::gripping(30.0);
        let mesh = MeridianMesh::chamber(&geo, 16).unwrap();
        let bad = MaterialParams::new(0.1, 0.05, 1070.0).unwrap();
        assert!(MembraneModel::new(mesh, bad).is_err());
    }

    #[test]
    fn elastic_gradient_matches_energy_differences() {
        let model = chamber_model(40.0, 16);
        let n = model.mesh().n_dofs();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let positions = model.mesh().positions(&u);
        let grad = model.elastic_gradient(&positions).unwrap();
        let h = 1e-6;
        for d in 0..n {
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[d] += h;
            dn[d] -= h;
            let ep = model.elastic_energy(&model.mesh().positions(&up)).unwrap();
            let em = model.elastic_energy(&model.mesh().positions(&dn)).unwrap();
            let fd = (ep - em) / (2.0 * h);
            assert_relative_eq!(grad[d], fd, max_relative = 2e-5, epsilon = 1e-8);
        }
    }

    #[test]
    fn tangent_stiffness_matches_residual_differences() {
        let model = chamber_model(35.0, 12);
        let n = model.mesh().n_dofs();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let p = 2.5;
        let mut k = BandedSymmetric::zeros(n, model.mesh().half_bandwidth());
        model.tangent_stiffness(&u, p, &mut k).unwrap();
        let h = 1e-5;
        for d in 0..n {
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[d] += h;
            dn[d] -= h;
            let rp = model.residual(&up, p).unwrap();
            let rm = model.residual(&dn, p).unwrap();
            for e in 0..n {
                let fd = (rp[e] - rm[e]) / (2.0 * h);
                let have = k.get(e, d);
                let scale = have.abs().max(fd.abs()).max(1e-4);
                assert!(
                    (have - fd).abs() <= 2e-3 * scale,
                    "K[{e}][{d}] = {have} vs FD {fd}"
                );
            }
        }
    }

    #[test]
    fn sphere_energy_matches_equibiaxial_closed_form() {
        // Self-similar inflation about the pinned pole multiplies every
        // element length and radius by the same stretch, so the discrete
        // energy must follow the equibiaxial neo-Hookean density on the
        // polyline area exactly, and the polyline area converges to the
        // sphere area.
        let (radius, h0, c10) = (25.0, 0.25, 0.0115);
        let mesh = MeridianMesh::sphere(radius, 128, h0).unwrap();
        let params = MaterialParams::new(c10, 0.0, 1070.0).unwrap();
        let model = MembraneModel::new(mesh, params).unwrap();
        let scaled = |lambda: f64| -> Vec<[f64; 2]> {
            model
                .mesh()
                .reference_positions()
                .iter()
                .map(|p| [p[0] * lambda, p[1] * lambda])
                .collect()
        };
        let density = |lambda: f64| 2.0 * lambda * lambda + lambda.powi(-4) - 3.0;
        for lambda in [1.2, 1.5, 2.0] {
            let e = model.elastic_energy(&scaled(lambda)).unwrap();
            let analytic = c10 * h0 * 4.0 * std::f64::consts::PI * radius * radius
                * density(lambda);
            assert_relative_eq!(e, analytic, max_relative = 2e-3);
        }
        // The lambda dependence itself is exact on the polyline.
        let (e1, e2) = (
            model.elastic_energy(&scaled(1.3)).unwrap(),
            model.elastic_energy(&scaled(1.9)).unwrap(),
        );
        assert_relative_eq!(e1 / e2, density(1.3) / density(1.9), max_relative = 1e-12);
    }

    #[test]
    fn hinge_energy_matches_hand_computation() {
        // Straight three-node meridian bent at the middle node by a known
        // angle; only that hinge stores energy.
        let profile = vec![[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        let constraints = vec![NodeConstraint::Free; 3];
        let mesh = MeridianMesh::from_profile(profile, constraints, 0.5, 1.0, 0.0).unwrap();
        let params = MaterialParams::new(0.2, 0.0, 1000.0).unwrap();
        let model = MembraneModel::new(mesh, params).unwrap();
        // Rotate the last node about the middle one while keeping element
        // lengths and midpoint radii... lengths stay 1, radii change, so
        // compare against the full analytic sum instead: pick a bend that
        // keeps the second element length at 1 and compute both terms.
        let psi = 0.3f64;
        let bent = vec![[1.0, 0.0], [2.0, 0.0], [2.0 + psi.cos(), psi.sin()]];
        let e = model.elastic_energy(&bent).unwrap();
        let kappa = 2.0 * std::f64::consts::PI * (2.0 / 3.0) * 0.2 * 0.5f64.powi(3) * 2.0 / 1.0;
        let hinge = 0.5 * kappa * psi * psi;
        // Membrane part of element 2: lambda_s = 1, lambda_t from the moved
        // midpoint radius.
        let lt = (2.0 + 2.0 + psi.cos()) / (2.0 + 3.0);
        let membrane = 0.2
            * 0.5
            * 2.0
            * std::f64::consts::PI
            * 2.5
            * (1.0 + lt * lt + lt.powi(-2) - 3.0);
        assert_relative_eq!(e, hinge + membrane, max_relative = 1e-12);
    }

    #[test]
    fn wrap_angle_stays_in_principal_range() {
        for x in [-9.0, -3.5, -0.2, 0.0, 0.2, 3.5, 9.0, 31.0] {
            let w = wrap_angle(x);
            assert!((-std::f64::consts::PI..=std::f64::consts::PI).contains(&w));
            // Same angle modulo 2 pi.
            let diff = (x - w) / (2.0 * std::f64::consts::PI);
            assert_relative_eq!(diff, diff.round(), epsilon = 1e-12);
        }
    }

    #[test]
    fn characteristic_force_is_positive_and_scales_with_c10() {
        let a = chamber_model(45.0, 24);
        assert!(a.characteristic_force() > 0.0);
        let geo = ChamberGeometry::gripping(45.0);
        let mesh = MeridianMesh::chamber(&geo, 24).unwrap();
        let stiff = MaterialParams::new(2.0 * 0.0115, 0.0, 1070.0).unwrap();
        let b = MembraneModel::new(mesh, stiff).unwrap();
        assert_relative_eq!(
            b.characteristic_force(),
            2.0 * a.characteristic_force(),
            max_relative = 1e-12
        );
    }
}
