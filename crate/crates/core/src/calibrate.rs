//! Fitting the clamping fixture to blocked-pressure measurements.
//!
//! The bench experiments quote the circuit pressure at a reference
//! injected volume while the membrane squeezes test objects of known
//! stiffness. Two rig properties are poorly known a priori: the flexure's
//! tip stiffness and the effective membrane area that converts travel to
//! volume and force to pressure. Both are identifiable from two anchor
//! measurements with different object stiffnesses, because the object and
//! flexure act in series: the ratio of the spring-borne pressure rises
//! pins the flexure stiffness, and the magnitude then pins the area.
//!
//! The fit runs the full quasistatic bench model, not a shortcut formula,
//! so whatever the composite path does between rest and the reference
//! injection is honored. Parameters live in log space, which keeps them
//! positive and makes the Gauss-Newton steps scale-free; a small grid of
//! starting points guards against a bad basin.

use crate::beam::{self, FixtureBeam, ObjectStiffness};
use crate::error::{Error, Result};
use crate::grasp::{plateau_pressure, simulate_quasistatic_test, ClampRig};
use crate::network::PvCharacteristic;
use crate::scalar::{of, Real};

/// One blocked-pressure measurement: the circuit pressure observed at a
/// reference injected volume against an object of known stiffness.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationAnchor<T> {
    pub object_stiffness_n_per_mm: T,
    pub injected_mm3: T,
    pub pressure_kpa: T,
}

/// Fitted rig: the flexure's tip stiffness, the effective membrane area,
/// and the fixture realizing that stiffness.
#[derive(Debug, Clone)]
pub struct FixtureCalibration<T> {
    pub beam_stiffness_n_per_mm: T,
    pub effective_area_mm2: T,
    pub fixture: FixtureBeam<T>,
    /// Model pressures at the anchors, in anchor order.
    pub predicted_kpa: Vec<T>,
    pub residual_rms_kpa: T,
}

impl<T: Real> FixtureCalibration<T> {
    /// Rig with the fitted area and the given object, for follow-up runs.
    pub fn rig(&self, object: ObjectStiffness<T>) -> ClampRig<T> {
        ClampRig {
            effective_area_mm2: self.effective_area_mm2,
            ..ClampRig::new(object)
        }
    }
}

/// Template flexure rescaled in modulus to hit a target tip stiffness;
/// stiffness is linear in the modulus, so the scaling is exact.
fn fixture_with_stiffness<T: Real>(k_b: T) -> Result<FixtureBeam<T>> {
    let unit = FixtureBeam::default_template().with_modulus(T::one())?;
    let k_unit = beam::stiffness(&unit)?;
    FixtureBeam::default_template().with_modulus(k_b / k_unit)
}

fn model_pressures<T: Real>(
    characteristic: &PvCharacteristic<T>,
    anchors: &[CalibrationAnchor<T>],
    contact_gap_mm: T,
    snap_displacement_mm: T,
    k_b: T,
    area: T,
) -> Result<Vec<T>> {
    let fixture = fixture_with_stiffness(k_b)?;
    anchors
        .iter()
        .map(|a| {
            let rig = ClampRig {
                object: ObjectStiffness::Finite(a.object_stiffness_n_per_mm),
                effective_area_mm2: area,
                contact_gap_mm,
                snap_displacement_mm,
            };
            let trace = simulate_quasistatic_test(characteristic, &fixture, &rig)?;
            plateau_pressure(&trace, a.injected_mm3)
        })
        .collect()
}

/// Fit flexure stiffness and effective membrane area so the quasistatic
/// bench model reproduces the anchor pressures, by damped Gauss-Newton in
/// log space over a grid of starting points.
pub fn calibrate_fixture<T: Real>(
    characteristic: &PvCharacteristic<T>,
    anchors: &[CalibrationAnchor<T>],
    contact_gap_mm: T,
    snap_displacement_mm: T,
) -> Result<FixtureCalibration<T>> {
    if anchors.len() < 2 {
        return Err(Error::Calibration(format!(
            "fitting stiffness and area needs at least 2 anchors, got {}",
            anchors.len()
        )));
    }
    for (i, a) in anchors.iter().enumerate() {
        if !(a.object_stiffness_n_per_mm > T::zero())
            || !(a.injected_mm3 > T::zero())
            || !a.pressure_kpa.is_finite()
        {
            return Err(Error::Calibration(format!("anchor {i} is not physical")));
        }
    }

    let sse = |x: &[T; 2]| -> Option<T> {
        let (k_b, area) = (x[0].exp(), x[1].exp());
        let preds =
            model_pressures(characteristic, anchors, contact_gap_mm, snap_displacement_mm, k_b, area)
                .ok()?;
        Some(
            preds
                .iter()
                .zip(anchors)
                .fold(T::zero(), |acc, (p, a)| acc + (*p - a.pressure_kpa).powi(2)),
        )
    };

    let mut best: Option<([T; 2], T)> = None;
    let starts_k = [10.0, 50.0, 200.0, 800.0];
    let starts_a = [300.0, 800.0, 1500.0, 3000.0];
    for &k0 in &starts_k {
        for &a0 in &starts_a {
            let mut x = [of::<T>(k0).ln(), of::<T>(a0).ln()];
            let Some(mut f) = sse(&x) else { continue };
            let h = of::<T>(1e-5);
            for _ in 0..60 {
                // Residuals and a central-difference Jacobian in log space.
                let Some(r) = model_pressures(
                    characteristic,
                    anchors,
                    contact_gap_mm,
                    snap_displacement_mm,
                    x[0].exp(),
                    x[1].exp(),
                )
                .ok()
                .map(|preds| {
                    preds
                        .iter()
                        .zip(anchors)
                        .map(|(p, a)| *p - a.pressure_kpa)
                        .collect::<Vec<T>>()
                }) else {
                    break;
                };
                let mut jac = vec![[T::zero(); 2]; anchors.len()];
                let mut singular = false;
                for c in 0..2 {
                    let mut xp = x;
                    xp[c] = xp[c] + h;
                    let mut xm = x;
                    xm[c] = xm[c] - h;
                    let (pp, pm) = (
                        model_pressures(
                            characteristic,
                            anchors,
                            contact_gap_mm,
                            snap_displacement_mm,
                            xp[0].exp(),
                            xp[1].exp(),
                        ),
                        model_pressures(
                            characteristic,
                            anchors,
                            contact_gap_mm,
                            snap_displacement_mm,
                            xm[0].exp(),
                            xm[1].exp(),
                        ),
                    );
                    match (pp, pm) {
                        (Ok(pp), Ok(pm)) => {
                            for (row, (a, b)) in jac.iter_mut().zip(pp.iter().zip(&pm)) {
                                row[c] = (*a - *b) / (of::<T>(2.0) * h);
                            }
                        }
                        _ => {
                            singular = true;
                            break;
                        }
                    }
                }
                if singular {
                    break;
                }
                // Normal equations for the 2-parameter step.
                let mut jtj = [[T::zero(); 2]; 2];
                let mut jtr = [T::zero(); 2];
                for (row, ri) in jac.iter().zip(&r) {
                    for a in 0..2 {
                        for b in 0..2 {
                            jtj[a][b] = jtj[a][b] + row[a] * row[b];
                        }
                        jtr[a] = jtr[a] + row[a] * *ri;
                    }
                }
                let damp = of::<T>(1e-10) * (T::one() + jtj[0][0].max(jtj[1][1]));
                jtj[0][0] = jtj[0][0] + damp;
                jtj[1][1] = jtj[1][1] + damp;
                let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
                if det.abs() <= T::zero() || !det.is_finite() {
                    break;
                }
                let dx = [
                    -(jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det,
                    -(jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det,
                ];
                // Backtracking line search keeps the step productive.
                let mut scale = T::one();
                let mut advanced = false;
                for _ in 0..20 {
                    let trial = [x[0] + scale * dx[0], x[1] + scale * dx[1]];
                    if let Some(ft) = sse(&trial) {
                        if ft < f {
                            x = trial;
                            f = ft;
                            advanced = true;
                            break;
                        }
                    }
                    scale = scale * of::<T>(0.5);
                }
                if !advanced || f <= of::<T>(1e-16) {
                    break;
                }
            }
            if best.as_ref().map_or(true, |(_, fb)| f < *fb) {
                best = Some((x, f));
            }
        }
    }

    let Some((x, f)) = best else {
        return Err(Error::Calibration(
            "no starting point produced a feasible bench model; check that the \
             characteristic covers the anchors' injected volumes"
                .into(),
        ));
    };
    let (k_b, area) = (x[0].exp(), x[1].exp());
    let predicted = model_pressures(
        characteristic,
        anchors,
        contact_gap_mm,
        snap_displacement_mm,
        k_b,
        area,
    )?;
    Ok(FixtureCalibration {
        beam_stiffness_n_per_mm: k_b,
        effective_area_mm2: area,
        fixture: fixture_with_stiffness(k_b)?,
        predicted_kpa: predicted,
        residual_rms_kpa: (f / of::<T>(anchors.len() as f64)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::CharSample;
    use approx::assert_relative_eq;

    /// Monotone characteristic p = (V - 1000) / 1000, sampled every
    /// 500 mm^3.
    fn ramp_char() -> PvCharacteristic<f64> {
        let samples = (0..=60)
            .map(|k| {
                let v = 1000.0 + 500.0 * k as f64;
                CharSample { volume_mm3: v, pressure_kpa: (v - 1000.0) / 1000.0, stable: true }
            })
            .collect();
        PvCharacteristic::from_samples(samples).unwrap()
    }

    fn anchors_from(ch: &PvCharacteristic<f64>, k_b: f64, area: f64) -> Vec<CalibrationAnchor<f64>> {
        [12.0, 2.0]
            .into_iter()
            .map(|k_o| {
                let p = super::model_pressures(ch, &[CalibrationAnchor {
                    object_stiffness_n_per_mm: k_o,
                    injected_mm3: 3500.0,
                    pressure_kpa: 0.0,
                }], 2.0, 10.0, k_b, area)
                .unwrap()[0];
                CalibrationAnchor {
                    object_stiffness_n_per_mm: k_o,
                    injected_mm3: 3500.0,
                    pressure_kpa: p,
                }
            })
            .collect()
    }

    #[test]
    fn two_anchors_recover_the_generating_parameters() {
        let ch = ramp_char();
        let anchors = anchors_from(&ch, 343.0, 1081.0);
        let fit = calibrate_fixture(&ch, &anchors, 2.0, 10.0).unwrap();
        assert_relative_eq!(fit.beam_stiffness_n_per_mm, 343.0, max_relative = 1e-4);
        assert_relative_eq!(fit.effective_area_mm2, 1081.0, max_relative = 1e-4);
        for (p, a) in fit.predicted_kpa.iter().zip(&anchors) {
            assert_relative_eq!(*p, a.pressure_kpa, max_relative = 1e-6);
        }
        assert!(fit.residual_rms_kpa < 1e-6);
    }

    #[test]
    fn fitted_fixture_realizes_the_fitted_stiffness() {
        let ch = ramp_char();
        let anchors = anchors_from(&ch, 120.0, 900.0);
        let fit = calibrate_fixture(&ch, &anchors, 2.0, 10.0).unwrap();
        let k = beam::stiffness(&fit.fixture).unwrap();
        assert_relative_eq!(k, fit.beam_stiffness_n_per_mm, max_relative = 1e-9);
    }

    #[test]
    fn plateau_rises_monotonically_after_the_fit() {
        let ch = ramp_char();
        let anchors = anchors_from(&ch, 343.0, 1081.0);
        let fit = calibrate_fixture(&ch, &anchors, 2.0, 10.0).unwrap();
        let mut last = f64::NEG_INFINITY;
        for i in 0..10 {
            let k_o = 0.5 + 3.0 * i as f64;
            let rig = fit.rig(ObjectStiffness::Finite(k_o));
            let trace = simulate_quasistatic_test(&ch, &fit.fixture, &rig).unwrap();
            let p = plateau_pressure(&trace, 3500.0).unwrap();
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn one_anchor_is_not_enough() {
        let ch = ramp_char();
        let anchors = anchors_from(&ch, 343.0, 1081.0);
        assert!(calibrate_fixture(&ch, &anchors[..1], 2.0, 10.0).is_err());
    }
}
