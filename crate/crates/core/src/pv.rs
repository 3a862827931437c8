//! Pressure-volume path analysis: limit points, snap jumps, and the
//! bistability classification.
//!
//! A traced equilibrium path is a one-parameter curve of states; what makes
//! a chamber useful as a gripper trigger is the shape of that curve in the
//! pressure-volume plane. Two kinds of folds matter. A pressure-limit point
//! is a local extremum of pressure along the curve: under pressure control
//! the state jumps there, and the first pressure maximum is the snap
//! pressure p_s. A volume-limit point is a local extremum of the total
//! cavity volume: under volume control (liquid pumped in or displaced from
//! elsewhere in a closed circuit) the state jumps there instead, and the
//! jump is isochoric because the liquid has nowhere to go during the
//! instant of the snap.
//!
//! [`snap_path`] constructs the volume-controlled response from a traced
//! path: it follows the curve while volume increases and, at each
//! volume-limit point, drops vertically to the nearest forward branch at
//! identical volume. The area enclosed between the equilibrium curve and
//! this snap path measures how strongly the chamber commits to the snap;
//! a chamber is classified bistable when that area is positive and the
//! curve additionally dips to negative pressure, which is what lets a
//! snapped chamber hold its everted state against a relaxed circuit.
//!
//! Analyses here work purely on sampled paths. Fold locations are refined
//! by a parabola through the bracketing sample triple, so their accuracy is
//! second order in the trace step; trace densely when fold coordinates
//! matter. Energies and areas are in kPa*mm^3, which is microjoules.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ChamberGeometry;
use crate::materials::MaterialParams;
use crate::membrane::continuation::{trace_equilibrium_path, ContinuationControl};
use crate::membrane::MembraneModel;
use crate::mesh::MeridianMesh;
use crate::path::EquilibriumPath;
use crate::scalar::{of, Real};

/// Default meridian element count for chamber traces; fold pressures move
/// by well under a percent on further refinement.
pub const DEFAULT_ELEMENTS: usize = 96;

/// Which quantity folds at a limit point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// Local extremum of pressure along the path; the snap point under
    /// pressure control.
    PressureLimit,
    /// Local extremum of total cavity volume along the path; the snap
    /// point under volume control.
    VolumeLimit,
}

/// A fold of the equilibrium path, located by a parabolic fit through the
/// bracketing sample triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPoint<T> {
    pub kind: LimitKind,
    pub volume_mm3: T,
    pub pressure_kpa: T,
    /// Index of the interior sample of the bracketing triple.
    pub index: usize,
}

/// Snap pressure and the recommended trace stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPressure<T> {
    /// Pressure at the first pressure-limit point.
    pub p_s_kpa: T,
    /// Recommended pressure at which a trace past the snap can stop: half
    /// again above the snap pressure.
    pub stop_pressure_kpa: T,
}

/// One isochoric jump of the volume-controlled response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapJump<T> {
    /// Volume at which the fold-back forces the jump; both endpoints share
    /// it exactly.
    pub volume_mm3: T,
    pub pressure_before_kpa: T,
    pub pressure_after_kpa: T,
    /// Sample index of the fold the jump leaves from.
    pub from_index: usize,
    /// Index of the sample opening the segment the jump lands on.
    pub to_index: usize,
}

/// The volume-controlled response built from an equilibrium path: follows
/// the path while volume increases and jumps at volume-limit points.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapPath<T> {
    /// `(volume_mm3, pressure_kpa)` with non-decreasing volume. Jumps
    /// appear as two consecutive points of identical volume.
    pub points: Vec<(T, T)>,
    pub jumps: Vec<SnapJump<T>>,
    /// True when a fold had no forward branch to land on; the response is
    /// reported only up to that fold.
    pub truncated: bool,
}

/// Bistability classification of one traced path.
#[derive(Debug, Clone, PartialEq)]
pub struct BistabilityReport<T> {
    /// The snap path deviates from the equilibrium path, enclosing a
    /// positive area. Implies at least one volume-limit point.
    pub has_enclosed_area: bool,
    /// Area between the equilibrium and snap paths, positive when the snap
    /// path lies below.
    pub enclosed_area_kpa_mm3: T,
    /// The path dips below zero pressure, so the everted state holds
    /// against a relaxed circuit.
    pub has_negative_pressure: bool,
    pub min_pressure_kpa: T,
    /// Pressure at the first pressure-limit point, if any.
    pub p_s_kpa: Option<T>,
    /// Energy released by the first volume-controlled jump, if any.
    pub released_energy_kpa_mm3: Option<T>,
    /// All folds in arc order.
    pub limit_points: Vec<LimitPoint<T>>,
}

impl<T: Real> BistabilityReport<T> {
    /// Bistable means both criteria at once: enclosed area and a negative
    /// pressure dip.
    pub fn bistable(&self) -> bool {
        self.has_enclosed_area && self.has_negative_pressure
    }
}

/// One angle of a tilt sweep; failures stay local to their angle.
#[derive(Debug)]
pub struct TiltSweepEntry<T> {
    pub tilt_deg: T,
    pub outcome: Result<BistabilityReport<T>>,
}

/// Tilt sweep result.
#[derive(Debug)]
pub struct TiltSweep<T> {
    /// One entry per requested angle, in request order.
    pub entries: Vec<TiltSweepEntry<T>>,
    /// Smallest angle classified bistable, if any; deeper tilts snap
    /// harder but over-deform the membrane, so the smallest sufficient
    /// angle is the recommendation.
    pub recommended_tilt_deg: Option<T>,
}

fn check_analyzable<T: Real>(path: &EquilibriumPath<T>) -> Result<()> {
    let s = path.samples();
    if s.len() < 3 {
        return Err(Error::Path(format!(
            "fold analysis needs at least 3 samples, got {}",
            s.len()
        )));
    }
    for i in 1..s.len() {
        if s[i].volume_mm3 == s[i - 1].volume_mm3 && s[i].pressure_kpa == s[i - 1].pressure_kpa {
            return Err(Error::Path(format!("duplicate consecutive samples at {}", i)));
        }
    }
    Ok(())
}

/// Vertex of the parabola through `(-1, y0)`, `(0, y1)`, `(1, y2)` in the
/// local coordinate, clamped to the bracketing interval.
fn parabola_vertex<T: Real>(y0: T, y1: T, y2: T) -> T {
    let two = of::<T>(2.0);
    let curv = y0 - two * y1 + y2;
    if curv == T::zero() {
        return T::zero();
    }
    let t = (y0 - y2) / (two * curv);
    t.max(-T::one()).min(T::one())
}

/// Quadratic interpolation at local coordinate `t` through the same three
/// points the vertex was fitted to.
fn parabola_eval<T: Real>(y0: T, y1: T, y2: T, t: T) -> T {
    let half = of::<T>(0.5);
    y1 + t * (y2 - y0) * half + t * t * (y0 - two_of(y1) + y2) * half
}

fn two_of<T: Real>(y: T) -> T {
    y + y
}

/// Locate every fold of the path in arc order.
///
/// A pressure-limit point is flagged where the pressure increment changes
/// sign across an interior sample, a volume-limit point where the volume
/// increment does; each is then refined by the parabola through the
/// bracketing triple. Needs at least 3 samples and rejects paths with
/// duplicate consecutive samples, which would make increments ambiguous.
pub fn find_limit_points<T: Real>(path: &EquilibriumPath<T>) -> Result<Vec<LimitPoint<T>>> {
    check_analyzable(path)?;
    let s = path.samples();
    let mut out = Vec::new();
    for i in 1..s.len() - 1 {
        let (v0, v1, v2) = (s[i - 1].volume_mm3, s[i].volume_mm3, s[i + 1].volume_mm3);
        let (p0, p1, p2) = (s[i - 1].pressure_kpa, s[i].pressure_kpa, s[i + 1].pressure_kpa);
        if (p1 - p0) * (p2 - p1) < T::zero() {
            let t = parabola_vertex(p0, p1, p2);
            out.push(LimitPoint {
                kind: LimitKind::PressureLimit,
                volume_mm3: parabola_eval(v0, v1, v2, t),
                pressure_kpa: parabola_eval(p0, p1, p2, t),
                index: i,
            });
        }
        if (v1 - v0) * (v2 - v1) < T::zero() {
            let t = parabola_vertex(v0, v1, v2);
            out.push(LimitPoint {
                kind: LimitKind::VolumeLimit,
                volume_mm3: parabola_eval(v0, v1, v2, t),
                pressure_kpa: parabola_eval(p0, p1, p2, t),
                index: i,
            });
        }
    }
    Ok(out)
}

/// Snap pressure of the path: the pressure at its first pressure-limit
/// point, along with the recommended stop pressure `1.5 * p_s` for traces
/// that continue past the snap. Errors with [`Error::NoCriticalPressure`]
/// on paths without a pressure fold.
pub fn critical_pressure<T: Real>(path: &EquilibriumPath<T>) -> Result<CriticalPressure<T>> {
    let first = find_limit_points(path)?
        .into_iter()
        .find(|lp| lp.kind == LimitKind::PressureLimit)
        .ok_or(Error::NoCriticalPressure)?;
    Ok(CriticalPressure {
        p_s_kpa: first.pressure_kpa,
        stop_pressure_kpa: of::<T>(1.5) * first.pressure_kpa,
    })
}

/// Build the volume-controlled response of a traced path.
///
/// The walk follows samples while volume increases. Where the path folds
/// back in volume the walk jumps at constant volume, landing on the
/// forward segment that crosses the jump volume with increasing volume and
/// the smallest pressure gap to the departing state; that keeps the
/// response history-continuous. A fold with no forward crossing truncates
/// the response there.
pub fn snap_path<T: Real>(path: &EquilibriumPath<T>) -> Result<SnapPath<T>> {
    check_analyzable(path)?;
    let s = path.samples();
    let n = s.len();
    let mut points = vec![(s[0].volume_mm3, s[0].pressure_kpa)];
    let mut jumps = Vec::new();
    let mut truncated = false;
    let mut i = 0usize;
    while i < n - 1 {
        if s[i + 1].volume_mm3 > s[i].volume_mm3 {
            points.push((s[i + 1].volume_mm3, s[i + 1].pressure_kpa));
            i += 1;
            continue;
        }
        let w = s[i].volume_mm3;
        let p_pre = s[i].pressure_kpa;
        let mut landing: Option<(T, usize, T)> = None;
        for j in i + 1..n - 1 {
            let (va, vb) = (s[j].volume_mm3, s[j + 1].volume_mm3);
            if vb > va && va <= w && w <= vb {
                let f = (w - va) / (vb - va);
                let p
                    = s[j].pressure_kpa + f * (s[j + 1].pressure_kpa - s[j].pressure_kpa);
                let gap = (p - p_pre).abs();
                if landing.map_or(true, |(best, _, _)| gap < best) {
                    landing = Some((gap, j, p));
                }
            }
        }
        let Some((_, j, p_post)) = landing else {
            truncated = true;
            break;
        };
        jumps.push(SnapJump {
            volume_mm3: w,
            pressure_before_kpa: p_pre,
            pressure_after_kpa: p_post,
            from_index: i,
            to_index: j,
        });
        points.push((w, p_post));
        i = j;
    }
    Ok(SnapPath { points, jumps, truncated })
}

/// Pressure of the volume-controlled response at a prescribed total
/// volume. History-continuous: below a jump volume the pressure comes from
/// the branch the response rode in on; at exactly the jump volume it is
/// the post-jump pressure. Volumes outside the traced coverage error with
/// [`Error::OutOfCoverage`].
pub fn snap_jump_pressure<T: Real>(path: &EquilibriumPath<T>, at_volume_mm3: T) -> Result<T> {
    let snap = snap_path(path)?;
    let pts = &snap.points;
    let lo = pts[0].0;
    let hi = pts[pts.len() - 1].0;
    if at_volume_mm3 < lo || at_volume_mm3 > hi {
        return Err(Error::OutOfCoverage(format!(
            "volume {} outside the snap response range [{}, {}]",
            at_volume_mm3, lo, hi
        )));
    }
    for k in (1..pts.len()).rev() {
        let (va, pa) = pts[k - 1];
        let (vb, pb) = pts[k];
        if va <= at_volume_mm3 && at_volume_mm3 <= vb {
            if vb == va {
                return Ok(pb);
            }
            let f = (at_volume_mm3 - va) / (vb - va);
            return Ok(pa + f * (pb - pa));
        }
    }
    unreachable!("coverage was checked against the point range");
}

fn trapezoid<T: Real>(pts: impl Iterator<Item = (T, T)>) -> T {
    let mut acc = T::zero();
    let mut prev: Option<(T, T)> = None;
    let half = of::<T>(0.5);
    for (v, p) in pts {
        if let Some((v0, p0)) = prev {
            acc = acc + half * (p + p0) * (v - v0);
        }
        prev = Some((v, p));
    }
    acc
}

/// Energy released by the first volume-controlled jump: the strain energy
/// difference between the departing and landing states at identical
/// volume, measured as the work integral along the equilibrium path
/// between them. Positive for a downward jump. Errors with
/// [`Error::Monostable`] when the path has no volume fold to jump at.
pub fn released_energy<T: Real>(path: &EquilibriumPath<T>) -> Result<T> {
    let snap = snap_path(path)?;
    let jump = snap.jumps.first().ok_or(Error::Monostable)?;
    Ok(released_by(path, jump))
}

fn released_by<T: Real>(path: &EquilibriumPath<T>, jump: &SnapJump<T>) -> T {
    let s = path.samples();
    let along = s[jump.from_index..=jump.to_index]
        .iter()
        .map(|q| (q.volume_mm3, q.pressure_kpa))
        .chain(std::iter::once((jump.volume_mm3, jump.pressure_after_kpa)));
    -trapezoid(along)
}

/// Classify one traced path.
///
/// The enclosed area is the integral difference between the snap path and
/// the equilibrium path, which is exactly the area of the loops the two
/// enclose: zero when the path never folds back in volume, positive when
/// the snap path lies below. The area flag requires the area to clear a
/// tiny threshold relative to the path's pressure-volume extent, and the
/// negative-pressure flag requires the minimum pressure below `-1e-6` kPa.
pub fn classify_bistability<T: Real>(path: &EquilibriumPath<T>) -> Result<BistabilityReport<T>> {
    let limit_points = find_limit_points(path)?;
    let snap = snap_path(path)?;
    let s = path.samples();

    let eq_end = if snap.truncated {
        // The walk died at the fold whose sample closed the point list.
        s.iter()
            .position(|q| {
                (q.volume_mm3, q.pressure_kpa) == *snap.points.last().expect("non-empty")
            })
            .unwrap_or(s.len() - 1)
    } else {
        s.len() - 1
    };
    let eq_integral =
        trapezoid(s[..=eq_end].iter().map(|q| (q.volume_mm3, q.pressure_kpa)));
    let snap_integral = trapezoid(snap.points.iter().copied());
    let enclosed = snap_integral - eq_integral;

    let p_span = path.max_pressure_kpa() - path.min_pressure_kpa();
    let v_span = path.max_volume_mm3() - path.rest_volume_mm3();
    let area_floor = of::<T>(1e-9) * p_span.abs() * v_span.abs();
    let min_pressure = path.min_pressure_kpa();

    let released = snap.jumps.first().map(|j| released_by(path, j));
    let p_s = limit_points
        .iter()
        .find(|lp| lp.kind == LimitKind::PressureLimit)
        .map(|lp| lp.pressure_kpa);

    Ok(BistabilityReport {
        has_enclosed_area: enclosed > area_floor,
        enclosed_area_kpa_mm3: enclosed,
        has_negative_pressure: min_pressure < of::<T>(-1e-6),
        min_pressure_kpa: min_pressure,
        p_s_kpa: p_s,
        released_energy_kpa_mm3: released,
        limit_points,
    })
}

/// Assemble a chamber model with its geometry-derived closures and trace
/// its equilibrium path.
pub fn chamber_path<T: Real>(
    geometry: &ChamberGeometry<T>,
    material: &MaterialParams<T>,
    n_elements: usize,
    control: &ContinuationControl<T>,
) -> Result<EquilibriumPath<T>> {
    let mesh = MeridianMesh::chamber(geometry, n_elements)?;
    let model = MembraneModel::with_closures(
        mesh,
        *material,
        Some(geometry.bending_thickness_mm()),
        geometry.body_compliance_mm3_per_kpa(material.c10_mpa),
    )?;
    trace_equilibrium_path(&model, control)
}

/// Trace and classify the template chamber at each tilt angle, in
/// parallel. A failure at one angle is recorded in that angle's entry and
/// leaves the others alone. The recommended angle is the smallest one
/// classified bistable.
pub fn tilt_sweep<T: Real + Send + Sync>(
    template: &ChamberGeometry<T>,
    tilts_deg: &[T],
    material: &MaterialParams<T>,
    n_elements: usize,
    control: &ContinuationControl<T>,
) -> TiltSweep<T> {
    let entries: Vec<TiltSweepEntry<T>> = tilts_deg
        .par_iter()
        .map(|&tilt| {
            let geo = template.clone().with_tilt(tilt);
            let outcome = chamber_path(&geo, material, n_elements, control)
                .and_then(|path| classify_bistability(&path));
            TiltSweepEntry { tilt_deg: tilt, outcome }
        })
        .collect();
    let recommended_tilt_deg = entries
        .iter()
        .filter_map(|e| match &e.outcome {
            Ok(report) if report.bistable() => Some(e.tilt_deg),
            _ => None,
        })
        .fold(None, |best: Option<T>, tilt| {
            Some(best.map_or(tilt, |b| b.min(tilt)))
        });
    TiltSweep { entries, recommended_tilt_deg }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{PathSample, Termination};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn path_from(pairs: &[(f64, f64)]) -> EquilibriumPath<f64> {
        let samples = pairs
            .iter()
            .map(|&(v, p)| PathSample {
                volume_mm3: v,
                pressure_kpa: p,
                apex_z_mm: 0.0,
                stable: true,
                negative_pivots: 0,
            })
            .collect();
        EquilibriumPath::from_samples(samples, Termination::MaxSteps).unwrap()
    }

    /// Cubic with two known pressure folds and monotone volume.
    fn cubic_path(n: usize) -> EquilibriumPath<f64> {
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v = 0.8 + 2.4 * i as f64 / (n - 1) as f64;
                (v, (v - 1.0) * (v - 2.0) * (v - 3.0))
            })
            .collect();
        path_from(&pairs)
    }

    #[test]
    fn cubic_folds_land_on_the_analytic_extrema() {
        let path = cubic_path(601);
        let folds = find_limit_points(&path).unwrap();
        assert_eq!(folds.len(), 2);
        assert!(folds.iter().all(|f| f.kind == LimitKind::PressureLimit));
        let inv_sqrt3 = 1.0 / 3.0f64.sqrt();
        assert_relative_eq!(folds[0].volume_mm3, 2.0 - inv_sqrt3, max_relative = 1e-4);
        assert_relative_eq!(folds[1].volume_mm3, 2.0 + inv_sqrt3, max_relative = 1e-4);
        let p_max = 2.0 / (3.0 * 3.0f64.sqrt());
        assert_relative_eq!(folds[0].pressure_kpa, p_max, max_relative = 1e-4);
        assert_relative_eq!(folds[1].pressure_kpa, -p_max, max_relative = 1e-4);
        assert!(folds[0].index < folds[1].index);
    }

    #[test]
    fn cubic_critical_pressure_is_the_first_fold() {
        let path = cubic_path(601);
        let cp = critical_pressure(&path).unwrap();
        assert_relative_eq!(cp.p_s_kpa, 2.0 / (3.0 * 3.0f64.sqrt()), max_relative = 1e-4);
        assert_relative_eq!(cp.stop_pressure_kpa, 1.5 * cp.p_s_kpa, max_relative = 1e-15);
    }

    #[test]
    fn cubic_is_not_bistable_despite_negative_pressure() {
        let path = cubic_path(601);
        let report = classify_bistability(&path).unwrap();
        assert!(report.has_negative_pressure);
        assert!(!report.has_enclosed_area);
        assert!(!report.bistable());
        assert_eq!(report.enclosed_area_kpa_mm3, 0.0);
        assert_eq!(report.released_energy_kpa_mm3, None);
        assert!(report.p_s_kpa.is_some());
        assert!(released_energy(&path).is_err());
    }

    #[test]
    fn monotone_path_has_no_limit_points() {
        let pairs: Vec<(f64, f64)> = (0..50).map(|i| (1.0 + i as f64, i as f64 * 0.1)).collect();
        let path = path_from(&pairs);
        assert!(find_limit_points(&path).unwrap().is_empty());
        assert!(matches!(critical_pressure(&path), Err(Error::NoCriticalPressure)));
        let report = classify_bistability(&path).unwrap();
        assert!(!report.bistable());
        assert_eq!(report.enclosed_area_kpa_mm3, 0.0);
    }

    #[test]
    fn short_and_degenerate_paths_are_rejected() {
        let two = path_from(&[(1.0, 0.0), (2.0, 1.0)]);
        assert!(matches!(find_limit_points(&two), Err(Error::Path(_))));
        let dup = path_from(&[(1.0, 0.0), (2.0, 1.0), (2.0, 1.0), (3.0, 2.0)]);
        assert!(matches!(find_limit_points(&dup), Err(Error::Path(_))));
    }

    /// Piecewise-linear Z: rise to (2, 1), fold back to (1.5, 0.2), rise
    /// again to (3, 0.4). Every quantity below is exact by hand.
    fn z_path() -> EquilibriumPath<f64> {
        path_from(&[(1.0, 0.0), (2.0, 1.0), (1.5, 0.2), (3.0, 0.4)])
    }

    #[test]
    fn z_curve_folds_and_snap_jump() {
        let path = z_path();
        let folds = find_limit_points(&path).unwrap();
        let vol_folds: Vec<_> =
            folds.iter().filter(|f| f.kind == LimitKind::VolumeLimit).collect();
        assert_eq!(vol_folds.len(), 2);

        let snap = snap_path(&path).unwrap();
        assert!(!snap.truncated);
        assert_eq!(snap.jumps.len(), 1);
        let jump = snap.jumps[0];
        assert_eq!(jump.volume_mm3, 2.0);
        assert_eq!(jump.pressure_before_kpa, 1.0);
        assert_relative_eq!(jump.pressure_after_kpa, 0.2 + 0.2 / 3.0, max_relative = 1e-15);

        // History continuity: just below the fold the response still rides
        // the first branch; at the fold it has jumped.
        assert_relative_eq!(
            snap_jump_pressure(&path, 1.999).unwrap(),
            0.999,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            snap_jump_pressure(&path, 2.0).unwrap(),
            jump.pressure_after_kpa,
            max_relative = 1e-15
        );
        assert!(snap_jump_pressure(&path, 2.0).unwrap() < jump.pressure_before_kpa);
        assert_relative_eq!(
            snap_jump_pressure(&path, 2.5).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-12
        );
        assert!(matches!(snap_jump_pressure(&path, 0.9), Err(Error::OutOfCoverage(_))));
        assert!(matches!(snap_jump_pressure(&path, 3.1), Err(Error::OutOfCoverage(_))));
    }

    #[test]
    fn z_curve_area_and_released_energy_match_hand_values() {
        let path = z_path();
        let report = classify_bistability(&path).unwrap();
        // Equilibrium integral: 0.5 - 0.3 + 0.45 = 0.65. Snap integral:
        // 0.5 + (0.26667 + 0.4) / 2 = 0.83333. Difference 11/60.
        assert_relative_eq!(report.enclosed_area_kpa_mm3, 11.0 / 60.0, max_relative = 1e-12);
        assert!(report.has_enclosed_area);
        assert!(!report.has_negative_pressure, "this toy never dips below zero");
        assert!(!report.bistable());
        let released = released_energy(&path).unwrap();
        assert_relative_eq!(released, 11.0 / 60.0, max_relative = 1e-12);
        assert_eq!(report.released_energy_kpa_mm3, Some(released));
    }

    /// Smooth S with both fold kinds, shaped like a chamber in a
    /// compliant circuit: an S in pressure sheared into a volume fold.
    fn smooth_s(n: usize) -> EquilibriumPath<f64> {
        use std::f64::consts::PI;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                let p = s + 0.35 * (2.0 * PI * s).sin();
                (1.0 + 2.0 * s + 2.0 * p, p)
            })
            .collect();
        path_from(&pairs)
    }

    #[test]
    fn classification_is_stable_under_resampling() {
        let coarse = classify_bistability(&smooth_s(200)).unwrap();
        let fine = classify_bistability(&smooth_s(400)).unwrap();
        assert_eq!(coarse.has_enclosed_area, fine.has_enclosed_area);
        assert_eq!(coarse.has_negative_pressure, fine.has_negative_pressure);
        assert!(coarse.has_enclosed_area);
        assert_relative_eq!(
            coarse.enclosed_area_kpa_mm3,
            fine.enclosed_area_kpa_mm3,
            max_relative = 0.01
        );
        assert_eq!(
            coarse.limit_points.iter().filter(|f| f.kind == LimitKind::VolumeLimit).count(),
            fine.limit_points.iter().filter(|f| f.kind == LimitKind::VolumeLimit).count()
        );
    }

    #[test]
    fn snap_jumps_are_isochoric_by_construction() {
        let snap = snap_path(&smooth_s(300)).unwrap();
        assert_eq!(snap.jumps.len(), 1);
        for jump in &snap.jumps {
            // Both jump endpoints in the point list carry the same volume.
            let at: Vec<_> =
                snap.points.iter().filter(|(v, _)| *v == jump.volume_mm3).collect();
            assert!(at.len() >= 2);
        }
        // Volume never decreases along the snap response.
        for k in 1..snap.points.len() {
            assert!(snap.points[k].0 >= snap.points[k - 1].0);
        }
    }

    proptest! {
        /// Monotone sampled curves never produce folds, enclose no area,
        /// and the snap response is the curve itself.
        #[test]
        fn monotone_paths_classify_monostable(
            seed in 0u64..1000,
            n in 10usize..80,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut v = 1.0f64;
            let mut p = 0.0f64;
            let mut pairs = vec![(v, p)];
            for _ in 0..n {
                v += rng.gen_range(0.01..0.5);
                p += rng.gen_range(0.01..0.3);
                pairs.push((v, p));
            }
            let path = path_from(&pairs);
            prop_assert!(find_limit_points(&path).unwrap().is_empty());
            let report = classify_bistability(&path).unwrap();
            prop_assert!(!report.has_enclosed_area);
            prop_assert_eq!(report.enclosed_area_kpa_mm3, 0.0);
            prop_assert!(!report.bistable());
            let snap = snap_path(&path).unwrap();
            prop_assert_eq!(snap.jumps.len(), 0);
            prop_assert_eq!(snap.points.len(), pairs.len());
        }

        /// Midpoint refinement of a polyline changes nothing the trapezoid
        /// rule can see: the enclosed area is identical, and the fold count
        /// per kind is preserved.
        #[test]
        fn polyline_midpoint_refinement_preserves_area(
            fold_v in 1.5f64..4.0,
            depth in 0.1f64..0.9,
            recover in 0.05f64..0.5,
        ) {
            let p_top = 1.0;
            let p_back = p_top * (1.0 - depth);
            let pairs = vec![
                (1.0, 0.0),
                (fold_v, p_top),
                (fold_v - 0.4, p_back),
                (fold_v + 2.0, p_back + recover),
            ];
            let path = path_from(&pairs);
            let mut refined = Vec::new();
            for k in 0..pairs.len() {
                refined.push(pairs[k]);
                if k + 1 < pairs.len() {
                    let mid = (
                        0.5 * (pairs[k].0 + pairs[k + 1].0),
                        0.5 * (pairs[k].1 + pairs[k + 1].1),
                    );
                    refined.push(mid);
                }
            }
            let path2 = path_from(&refined);
            let a = classify_bistability(&path).unwrap();
            let b = classify_bistability(&path2).unwrap();
            prop_assert_eq!(a.has_enclosed_area, b.has_enclosed_area);
            prop_assert!((a.enclosed_area_kpa_mm3 - b.enclosed_area_kpa_mm3).abs() <= 1e-12);
            prop_assert!(a.enclosed_area_kpa_mm3 > 0.0);
        }
    }
}
