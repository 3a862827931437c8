//! Clamping-fixture mechanics: a cantilever of straight segments with
//! per-segment tilt, loaded by a transverse tip force.
//!
//! Each segment `i` has length `L_i` (mm), second moment of area `I_i`
//! (mm^4), and tilt `theta_i` from the load-normal axis. With `x_i` the
//! running abscissa (`x_i = x_{i-1} + L_i cos(theta_i)`) and `X_L` the tip
//! abscissa, unit-curvature integration of the Euler-Bernoulli moment field
//! gives the tip deflection in closed form:
//!
//! ```text
//! delta = (P / E) * sum_i [ L_i * dx_i^2 - dx_i * cos(theta_i) * L_i^2
//!                           + cos(theta_i)^2 / 3 * L_i^3 ] / I_i
//! dx_i = X_L - x_{i-1}
//! ```
//!
//! For collinear segments with equal `I` this reduces to the cantilever
//! formula `delta = P L^3 / (3 E I)`.

use crate::error::{Error, Result};
use crate::scalar::{of, Real};

/// One straight fixture segment. `theta_deg` is the tilt from the abscissa;
/// vertical members (`|theta| >= 90°`) are rejected because the projected
/// span collapses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSegment<T> {
    pub length_mm: T,
    pub i_moment_mm4: T,
    pub theta_deg: T,
}

impl<T: Real> BeamSegment<T> {
    pub fn new(length_mm: T, i_moment_mm4: T, theta_deg: T) -> Result<Self> {
        if !length_mm.is_finite() || !i_moment_mm4.is_finite() || !theta_deg.is_finite() {
            return Err(Error::NonFinite { context: "beam segment".into() });
        }
        if length_mm <= T::zero() {
            return Err(Error::Beam(format!("segment length must be positive, got {length_mm}")));
        }
        if i_moment_mm4 <= T::zero() {
            return Err(Error::Beam(format!(
                "segment second moment must be positive, got {i_moment_mm4}"
            )));
        }
        if theta_deg.abs() >= of(90.0) {
            return Err(Error::Beam(format!(
                "segment tilt {theta_deg} deg has no horizontal span (|theta| >= 90)"
            )));
        }
        Ok(Self { length_mm, i_moment_mm4, theta_deg })
    }

    fn cos_theta(&self) -> T {
        (self.theta_deg * of(std::f64::consts::PI / 180.0)).cos()
    }
}

/// Cantilevered fixture beam: segments from the clamped root to the loaded tip.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureBeam<T> {
    pub segments: Vec<BeamSegment<T>>,
    pub e_mpa: T,
}

impl<T: Real> FixtureBeam<T> {
    pub fn new(segments: Vec<BeamSegment<T>>, e_mpa: T) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Beam("a beam needs at least one segment".into()));
        }
        if !e_mpa.is_finite() || e_mpa <= T::zero() {
            return Err(Error::Beam(format!("modulus must be positive, got {e_mpa}")));
        }
        Ok(Self { segments, e_mpa })
    }

    /// Nominal three-segment printed fixture. The dimensions are a plausible
    /// template only; calibrate the modulus against measured plateau
    /// pressures before trusting absolute stiffness.
    pub fn default_template() -> Self {
        let seg = |l: f64, theta: f64| BeamSegment::new(of(l), of(22.5), of(theta)).unwrap();
        Self { segments: vec![seg(25.0, 0.0), seg(20.0, 20.0), seg(15.0, 40.0)], e_mpa: of(2400.0) }
    }

    /// Same geometry with a different modulus (used by calibration; stiffness
    /// is proportional to `E`).
    pub fn with_modulus(&self, e_mpa: T) -> Result<Self> {
        Self::new(self.segments.clone(), e_mpa)
    }

    /// Tip abscissa `X_L` (mm).
    pub fn tip_abscissa(&self) -> T {
        self.segments.iter().fold(T::zero(), |x, s| x + s.length_mm * s.cos_theta())
    }
}

/// Tip deflection (mm) under tip force `p_n` (N), by the closed form above.
pub fn tip_deflection<T: Real>(beam: &FixtureBeam<T>, p_n: T) -> Result<T> {
    if !p_n.is_finite() {
        return Err(Error::NonFinite { context: "beam load".into() });
    }
    let xl = beam.tip_abscissa();
    let third = of::<T>(1.0 / 3.0);
    let mut sum = T::zero();
    let mut x_prev = T::zero();
    for s in &beam.segments {
        let c = s.cos_theta();
        let l = s.length_mm;
        let dx = xl - x_prev;
        sum += (l * dx * dx - dx * c * l * l + third * c * c * l * l * l) / s.i_moment_mm4;
        x_prev += l * c;
    }
    let delta = p_n / beam.e_mpa * sum;
    if !delta.is_finite() {
        return Err(Error::NonFinite { context: "tip deflection".into() });
    }
    Ok(delta)
}

/// Tip compliance `C_b = delta / P` (mm/N); independent of the load level.
pub fn compliance<T: Real>(beam: &FixtureBeam<T>) -> Result<T> {
    tip_deflection(beam, T::one())
}

/// Tip stiffness `k_b = 1 / C_b` (N/mm).
pub fn stiffness<T: Real>(beam: &FixtureBeam<T>) -> Result<T> {
    let c = compliance(beam)?;
    if c <= T::zero() {
        return Err(Error::Beam("non-positive compliance".into()));
    }
    Ok(T::one() / c)
}

/// Stiffness of a grasped object, or a rigid stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectStiffness<T> {
    /// Linear spring stiffness in N/mm; must be positive.
    Finite(T),
    Rigid,
}

impl<T: Real> ObjectStiffness<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            ObjectStiffness::Finite(k) if !k.is_finite() || *k <= T::zero() => Err(Error::Beam(
                format!("object stiffness must be positive and finite, got {k}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Series stiffness of the fixture and the object: `k_eq = k_b k_o / (k_b +
/// k_o)`, with the rigid marker collapsing to `k_b`.
pub fn series_stiffness<T: Real>(k_b: T, k_o: ObjectStiffness<T>) -> Result<T> {
    if !k_b.is_finite() || k_b <= T::zero() {
        return Err(Error::Beam(format!("fixture stiffness must be positive, got {k_b}")));
    }
    k_o.validate()?;
    Ok(match k_o {
        ObjectStiffness::Rigid => k_b,
        ObjectStiffness::Finite(k) => k_b * k / (k_b + k),
    })
}

/// Chamber pressure (kPa) needed to push the fixture tip by `delta_mm`
/// through an effective piston area `a_eff_mm2`: `p = delta / (A_eff C_b)`,
/// converted from N/mm^2 to kPa.
pub fn pressure_from_deflection<T: Real>(
    beam: &FixtureBeam<T>,
    a_eff_mm2: T,
    delta_mm: T,
) -> Result<T> {
    if a_eff_mm2 <= T::zero() || !a_eff_mm2.is_finite() {
        return Err(Error::Beam(format!("effective area must be positive, got {a_eff_mm2}")));
    }
    let c = compliance(beam)?;
    Ok(delta_mm / (a_eff_mm2 * c) * of(1000.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn collinear(n: usize, total_l: f64, i_mm4: f64, e: f64) -> FixtureBeam<f64> {
        let l = total_l / n as f64;
        let segs = (0..n).map(|_| BeamSegment::new(l, i_mm4, 0.0).unwrap()).collect();
        FixtureBeam::new(segs, e).unwrap()
    }

    /// Adaptive Simpson quadrature, used as an independent oracle for the
    /// closed-form deflection.
    fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, 40)
    }

    /// Deflection by numerical integration of (X_L - x)^2 / cos(theta_i) over
    /// each segment's abscissa span, independent of the closed form.
    fn deflection_by_quadrature(beam: &FixtureBeam<f64>, p: f64) -> f64 {
        let xl = beam.tip_abscissa();
        let mut x_prev = 0.0;
        let mut sum = 0.0;
        for s in &beam.segments {
            let c = (s.theta_deg * std::f64::consts::PI / 180.0).cos();
            let x_next = x_prev + s.length_mm * c;
            let integrand = |x: f64| (xl - x).powi(2) / c;
            sum += adaptive_simpson(&integrand, x_prev, x_next, 1e-13) / s.i_moment_mm4;
            x_prev = x_next;
        }
        p / beam.e_mpa * sum
    }

    #[test]
    fn collinear_uniform_matches_cantilever_formula() {
        let beam = collinear(3, 60.0, 22.5, 2400.0);
        let p = 2.5;
        let exact = p * 60.0f64.powi(3) / (3.0 * 2400.0 * 22.5);
        assert_relative_eq!(tip_deflection(&beam, p).unwrap(), exact, max_relative = 1e-12);
    }

    #[test]
    fn zero_load_zero_deflection() {
        let beam = FixtureBeam::<f64>::default_template();
        assert_eq!(tip_deflection(&beam, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn vertical_segment_rejected() {
        assert!(BeamSegment::new(10.0, 22.5, 90.0).is_err());
        assert!(BeamSegment::new(10.0, 22.5, -90.0).is_err());
        assert!(BeamSegment::new(10.0, 22.5, 89.9).is_ok());
    }

    #[test]
    fn degenerate_segment_rejected() {
        assert!(BeamSegment::new(10.0, 0.0, 0.0).is_err());
        assert!(BeamSegment::new(0.0, 22.5, 0.0).is_err());
        assert!(FixtureBeam::<f64>::new(vec![], 2400.0).is_err());
    }

    #[test]
    fn closed_form_matches_quadrature_on_template() {
        let beam = FixtureBeam::<f64>::default_template();
        let p = 1.7;
        assert_relative_eq!(
            tip_deflection(&beam, p).unwrap(),
            deflection_by_quadrature(&beam, p),
            max_relative = 1e-11
        );
    }

    #[test]
    fn closed_form_matches_quadrature_on_random_geometries() {
        let mut rng = ChaCha8Rng::seed_from_u64(421);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let segs: Vec<BeamSegment<f64>> = (0..n)
                .map(|_| {
                    BeamSegment::new(
                        rng.gen_range(5.0..40.0),
                        rng.gen_range(5.0..200.0),
                        rng.gen_range(-60.0..60.0),
                    )
                    .unwrap()
                })
                .collect();
            let beam = FixtureBeam::new(segs, rng.gen_range(500.0..5000.0)).unwrap();
            let p = rng.gen_range(0.1..20.0);
            let exact = tip_deflection(&beam, p).unwrap();
            let quad = deflection_by_quadrature(&beam, p);
            assert!(
                (exact - quad).abs() <= 1e-9 * quad.abs().max(1.0),
                "mismatch: closed {exact} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn compliance_reproduces_deflection_and_scales_with_i() {
        let beam = FixtureBeam::<f64>::default_template();
        let c = compliance(&beam).unwrap();
        for p in [0.5, 3.0, 11.0] {
            assert_relative_eq!(c * p, tip_deflection(&beam, p).unwrap(), max_relative = 1e-12);
        }
        let stiffer = FixtureBeam::new(
            beam.segments
                .iter()
                .map(|s| BeamSegment::new(s.length_mm, 2.0 * s.i_moment_mm4, s.theta_deg).unwrap())
                .collect(),
            beam.e_mpa,
        )
        .unwrap();
        assert_relative_eq!(compliance(&stiffer).unwrap(), c / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn series_stiffness_cases() {
        assert_relative_eq!(
            series_stiffness(2.0, ObjectStiffness::Finite(2.0)).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            series_stiffness(3.0, ObjectStiffness::Finite(6.0)).unwrap(),
            2.0,
            max_relative = 1e-15
        );
        assert_eq!(series_stiffness(2.5, ObjectStiffness::<f64>::Rigid).unwrap(), 2.5);
        assert!(series_stiffness(0.0, ObjectStiffness::Finite(1.0)).is_err());
        assert!(series_stiffness(1.0, ObjectStiffness::Finite(0.0)).is_err());
    }

    #[test]
    fn pressure_deflection_round_trip() {
        let beam = FixtureBeam::<f64>::default_template();
        let a_eff = 1452.2;
        assert_eq!(pressure_from_deflection(&beam, a_eff, 0.0).unwrap(), 0.0);
        let delta = 4.2;
        let p_kpa = pressure_from_deflection(&beam, a_eff, delta).unwrap();
        // Back out the tip force and re-derive the deflection.
        let force = p_kpa / 1000.0 * a_eff;
        assert_relative_eq!(tip_deflection(&beam, force).unwrap(), delta, max_relative = 1e-12);
        assert_relative_eq!(
            pressure_from_deflection(&beam, 2.0 * a_eff, delta).unwrap(),
            p_kpa / 2.0,
            max_relative = 1e-12
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        /// Deflection is linear in the load.
        #[test]
        fn deflection_linear_in_load(p in 0.01f64..50.0, s in 0.1f64..10.0) {
            let beam = FixtureBeam::<f64>::default_template();
            let d1 = tip_deflection(&beam, p).unwrap();
            let d2 = tip_deflection(&beam, s * p).unwrap();
            prop_assert!((d2 - s * d1).abs() <= 1e-12 * d2.abs().max(1.0));
        }

        /// Series stiffness is symmetric, bounded by the softer member, and
        /// halves at equal stiffnesses.
        #[test]
        fn series_stiffness_properties(ka in 0.01f64..100.0, kb in 0.01f64..100.0) {
            let ab = series_stiffness(ka, ObjectStiffness::Finite(kb)).unwrap();
            let ba = series_stiffness(kb, ObjectStiffness::Finite(ka)).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
            prop_assert!(ab <= ka.min(kb) + 1e-12);
            let half = series_stiffness(ka, ObjectStiffness::Finite(ka)).unwrap();
            prop_assert!((half - ka / 2.0).abs() <= 1e-12 * ka.max(1.0));
        }
    }
}
