//! Equilibrium path containers.
//!
//! A traced path is a sequence of equilibrium states sampled along the
//! solution curve of the pressurized membrane, each carrying the enclosed
//! volume, the chamber pressure, and a stability flag from the inertia of
//! the pressure-control tangent stiffness.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One converged equilibrium state along a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample<T> {
    pub volume_mm3: T,
    pub pressure_kpa: T,
    /// Axial position of the membrane apex (the axis node), a convenient
    /// scalar picture of the shape.
    pub apex_z_mm: T,
    /// Stable under pressure control: no negative eigenvalue in the
    /// tangent stiffness.
    pub stable: bool,
    /// Count of negative stiffness eigenvalues at this state.
    pub negative_pivots: usize,
}

/// Why a trace stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination<T> {
    /// Pressure climbed back past the overshoot factor times the snap
    /// pressure after at least one pressure fold: the interesting part of
    /// the curve is behind.
    PressureRecovered { p_s_kpa: T },
    /// The enclosed volume reached the configured cap.
    VolumeCap { volume_mm3: T },
    /// The step budget ran out.
    MaxSteps,
    /// The arc step shrank below its floor without converging; the path up
    /// to the last converged state is returned.
    Stalled { arc_mm: T },
}

/// A traced equilibrium path with its termination diagnostic.
#[derive(Debug, Clone)]
pub struct EquilibriumPath<T> {
    samples: Vec<PathSample<T>>,
    termination: Termination<T>,
}

impl<T: Real> EquilibriumPath<T> {
    pub fn from_samples(
        samples: Vec<PathSample<T>>,
        termination: Termination<T>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Path("a path needs at least one sample".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.volume_mm3.is_finite() || !s.pressure_kpa.is_finite() || !s.apex_z_mm.is_finite()
            {
                return Err(Error::NonFinite { context: format!("path sample {i}") });
            }
            if s.volume_mm3 <= T::zero() {
                return Err(Error::Path(format!(
                    "sample {i} has non-positive volume {}",
                    s.volume_mm3
                )));
            }
        }
        Ok(Self { samples, termination })
    }

    pub fn samples(&self) -> &[PathSample<T>] {
        &self.samples
    }

    pub fn termination(&self) -> Termination<T> {
        self.termination
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Volume of the first sample (the rest state on a fresh trace).
    pub fn rest_volume_mm3(&self) -> T {
        self.samples[0].volume_mm3
    }

    pub fn min_pressure_kpa(&self) -> T {
        self.samples.iter().map(|s| s.pressure_kpa).fold(T::infinity(), T::min)
    }

    pub fn max_pressure_kpa(&self) -> T {
        self.samples.iter().map(|s| s.pressure_kpa).fold(T::neg_infinity(), T::max)
    }

    pub fn max_volume_mm3(&self) -> T {
        self.samples.iter().map(|s| s.volume_mm3).fold(T::neg_infinity(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: f64, p: f64) -> PathSample<f64> {
        PathSample { volume_mm3: v, pressure_kpa: p, apex_z_mm: 0.0, stable: true, negative_pivots: 0 }
    }

    #[test]
    fn construction_validates_samples() {
        assert!(EquilibriumPath::<f64>::from_samples(vec![], Termination::MaxSteps).is_err());
        assert!(EquilibriumPath::from_samples(vec![sample(0.0, 1.0)], Termination::MaxSteps)
            .is_err());
        assert!(
            EquilibriumPath::from_samples(vec![sample(1.0, f64::NAN)], Termination::MaxSteps)
                .is_err()
        );
        let p = EquilibriumPath::from_samples(
            vec![sample(10.0, 0.0), sample(12.0, 2.0), sample(14.0, -1.0)],
            Termination::VolumeCap { volume_mm3: 14.0 },
        )
        .unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.rest_volume_mm3(), 10.0);
        assert_eq!(p.min_pressure_kpa(), -1.0);
        assert_eq!(p.max_pressure_kpa(), 2.0);
        assert_eq!(p.max_volume_mm3(), 14.0);
    }
}
