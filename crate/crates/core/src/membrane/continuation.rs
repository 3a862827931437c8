//! Arc-length continuation of pressure-volume equilibrium paths.
//!
//! Snap-through paths fold back in pressure, so plain pressure stepping
//! loses the curve at the first limit point. The tracer advances instead
//! with a cylindrical arc-length constraint on the displacement increment,
//!
//! ```text
//! || u_k+1 - u_k ||_RMS = arc
//! ```
//!
//! treating pressure as the free continuation parameter (zero load weight
//! in the constraint). Each corrector iteration solves the bordered system
//! with two banded factorization backsolves and picks the constraint-circle
//! root whose displacement increment stays aligned with the accumulated
//! step. Failed steps halve the arc; converged steps adapt it toward a
//! target iteration count.
//!
//! Stability is classified at every accepted state from the inertia of the
//! tangent stiffness: no negative pivots means stable under pressure
//! control.
//!
//! A separate volume-controlled Newton driver pins the enclosed volume
//! instead of the arc; it passes through pressure folds (where the plain
//! stiffness is singular the bordered volume row keeps the system regular)
//! and is what test oracles use to hit exact volume targets.

use crate::error::{Error, Result};
use crate::linalg::BandedSymmetric;
use crate::membrane::MembraneModel;
use crate::path::{EquilibriumPath, PathSample, Termination};
use crate::scalar::{of, Real};

/// Knobs for [`trace_equilibrium_path`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationControl<T> {
    /// Starting RMS displacement increment per step (mm).
    pub initial_arc_mm: T,
    /// Floor below which a failing step counts as a stall.
    pub min_arc_mm: T,
    pub max_arc_mm: T,
    /// Residual tolerance relative to the model's characteristic force.
    pub residual_tol_rel: T,
    /// Corrector iteration count the step adaptation aims for.
    pub target_iterations: usize,
    /// Corrector iterations before a step attempt is abandoned.
    pub max_iterations: usize,
    /// Accepted-step budget; zero yields just the rest state.
    pub max_steps: usize,
    /// Stop once pressure exceeds this multiple of the detected snap
    /// pressure after a fold.
    pub pressure_overshoot: T,
    /// Explicit volume cap (mm^3); when absent the cap is
    /// `max_volume_ratio` times the rest volume.
    pub max_volume_mm3: Option<T>,
    pub max_volume_ratio: T,
}

impl<T: Real> Default for ContinuationControl<T> {
    fn default() -> Self {
        Self {
            initial_arc_mm: of(0.1),
            min_arc_mm: of(1e-6),
            max_arc_mm: of(0.5),
            residual_tol_rel: of(1e-8),
            target_iterations: 6,
            max_iterations: 25,
            max_steps: 4000,
            pressure_overshoot: of(1.5),
            max_volume_mm3: None,
            max_volume_ratio: of(8.0),
        }
    }
}

impl<T: Real> ContinuationControl<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.initial_arc_mm,
            self.min_arc_mm,
            self.max_arc_mm,
            self.residual_tol_rel,
            self.pressure_overshoot,
            self.max_volume_ratio,
        ];
        if positive.iter().any(|v| !v.is_finite() || *v <= T::zero()) {
            return Err(Error::Solver("continuation parameters must be positive".into()));
        }
        if self.min_arc_mm > self.initial_arc_mm || self.initial_arc_mm > self.max_arc_mm {
            return Err(Error::Solver(
                "arc bounds must satisfy min <= initial <= max".into(),
            ));
        }
        if self.max_iterations == 0 || self.target_iterations == 0 {
            return Err(Error::Solver("iteration limits must be positive".into()));
        }
        if let Some(cap) = self.max_volume_mm3 {
            if !cap.is_finite() || cap <= T::zero() {
                return Err(Error::Solver(format!("volume cap must be positive, got {cap}")));
            }
        }
        Ok(())
    }
}

fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

struct StabilityProbe<'m, T> {
    model: &'m MembraneModel<T>,
    k: BandedSymmetric<T>,
}

impl<'m, T: Real> StabilityProbe<'m, T> {
    fn new(model: &'m MembraneModel<T>) -> Self {
        let n = model.mesh().n_dofs();
        let k = BandedSymmetric::zeros(n, model.mesh().half_bandwidth());
        Self { model, k }
    }

    /// Negative pivot count at a state, or `None` right at a singular point.
    fn negative_pivots(&mut self, u: &[T], p_kpa: T) -> Option<usize> {
        self.model.tangent_stiffness(u, p_kpa, &mut self.k).ok()?;
        self.k.ldlt().ok().map(|f| f.negative_pivots())
    }
}

/// Trace the equilibrium path of `model` from its rest state under
/// increasing pressure, following folds.
pub fn trace_equilibrium_path<T: Real>(
    model: &MembraneModel<T>,
    control: &ContinuationControl<T>,
) -> Result<EquilibriumPath<T>> {
    trace_impl(model, control, None)
}

/// Scratch diagnostic, removed before release: also returns the full node
/// displacement vector at every accepted sample.
#[doc(hidden)]
pub fn trace_equilibrium_path_with_states<T: Real>(
    model: &MembraneModel<T>,
    control: &ContinuationControl<T>,
) -> Result<(EquilibriumPath<T>, Vec<Vec<T>>)> {
    let mut states = Vec::new();
    let path = trace_impl(model, control, Some(&mut states))?;
    Ok((path, states))
}

fn trace_impl<T: Real>(
    model: &MembraneModel<T>,
    control: &ContinuationControl<T>,
    mut states: Option<&mut Vec<Vec<T>>>,
) -> Result<EquilibriumPath<T>> {
    control.validate()?;
    let n = model.mesh().n_dofs();
    let sqrt_n = of::<T>(n as f64).sqrt();
    let f_tol = control.residual_tol_rel * model.characteristic_force();

    let mut u = vec![T::zero(); n];
    let mut p = T::zero();
    let mut k = BandedSymmetric::zeros(n, model.mesh().half_bandwidth());
    let mut probe = StabilityProbe::new(model);

    let v0 = model.total_volume(&u, p);
    let v_cap = control.max_volume_mm3.unwrap_or(control.max_volume_ratio * v0);

    let rest_pivots = probe.negative_pivots(&u, p).unwrap_or(0);
    let mut samples = vec![PathSample {
        volume_mm3: v0,
        pressure_kpa: p,
        apex_z_mm: model.mesh().positions(&u)[0][1],
        stable: rest_pivots == 0,
        negative_pivots: rest_pivots,
    }];
    if let Some(out) = states.as_deref_mut() {
        out.push(u.clone());
    }

    if v0 >= v_cap {
        return EquilibriumPath::from_samples(samples, Termination::VolumeCap { volume_mm3: v0 });
    }
    if control.max_steps == 0 {
        return EquilibriumPath::from_samples(samples, Termination::MaxSteps);
    }

    let mut arc = control.initial_arc_mm;
    let mut prev_du: Option<(Vec<T>, T)> = None;
    let mut p_snap: Option<T> = None;
    let mut last_dp = T::zero();
    let mut termination = Termination::MaxSteps;

    'steps: for _ in 0..control.max_steps {
        // One accepted step, with arc halving on failure.
        let ((step_u, step_p), iterations) = loop {
            match attempt_step(model, &mut k, &u, p, arc, sqrt_n, f_tol, &prev_du, control) {
                Ok(ok) => break ok,
                Err(_) => {
                    arc = arc * of(0.5);
                    if arc < control.min_arc_mm {
                        termination = Termination::Stalled { arc_mm: arc };
                        break 'steps;
                    }
                }
            }
        };

        for (ui, d) in u.iter_mut().zip(&step_u) {
            *ui += *d;
        }
        p += step_p;

        let volume = model.total_volume(&u, p);
        let (stable, pivots) = match probe.negative_pivots(&u, p) {
            Some(c) => (c == 0, c),
            None => {
                let prev = samples.last().unwrap();
                (prev.stable, prev.negative_pivots)
            }
        };
        let apex = model.mesh().positions(&u)[0][1];
        let prev_pressure = samples.last().unwrap().pressure_kpa;
        samples.push(PathSample {
            volume_mm3: volume,
            pressure_kpa: p,
            apex_z_mm: apex,
            stable,
            negative_pivots: pivots,
        });
        if let Some(out) = states.as_deref_mut() {
            out.push(u.clone());
        }

        // First positive pressure fold defines the snap pressure.
        let dp_step = p - prev_pressure;
        if p_snap.is_none() && last_dp > T::zero() && dp_step < T::zero() && prev_pressure > T::zero()
        {
            p_snap = Some(prev_pressure);
        }
        last_dp = dp_step;

        if let Some(ps) = p_snap {
            if p >= control.pressure_overshoot * ps {
                termination = Termination::PressureRecovered { p_s_kpa: ps };
                break;
            }
        }
        if volume >= v_cap {
            termination = Termination::VolumeCap { volume_mm3: volume };
            break;
        }

        prev_du = Some((step_u, step_p));
        let ratio = of::<T>(control.target_iterations as f64 / iterations.max(1) as f64)
            .sqrt()
            .max(of(0.5))
            .min(of(2.0));
        arc = (arc * ratio).max(control.min_arc_mm).min(control.max_arc_mm);
    }

    EquilibriumPath::from_samples(samples, termination)
}

/// One arc-length step attempt from `(u, p)`. Returns the converged
/// increment and the iteration count it took.
#[allow(clippy::too_many_arguments)]
fn attempt_step<T: Real>(
    model: &MembraneModel<T>,
    k: &mut BandedSymmetric<T>,
    u: &[T],
    p: T,
    arc: T,
    sqrt_n: T,
    f_tol: T,
    prev_du: &Option<(Vec<T>, T)>,
    control: &ContinuationControl<T>,
) -> Result<((Vec<T>, T), usize)> {
    let n = u.len();
    let radius = arc * sqrt_n;
    let milli = of::<T>(1e-3);

    // Predictor: tangent from the factorized stiffness at the current state.
    model.tangent_stiffness(u, p, k)?;
    let factor = k.ldlt()?;
    let q: Vec<T> = model.volume_gradient(u).iter().map(|g| *g * milli).collect();
    let du_t = factor.solve(&q);
    let norm_t = norm2(&du_t);
    if !norm_t.is_finite() || norm_t <= T::zero() {
        return Err(Error::Solver("degenerate predictor tangent".into()));
    }
    let sigma = match prev_du {
        None => T::one(),
        Some((pdu, pdp)) => {
            let d = dot(&du_t, pdu);
            let threshold = of::<T>(1e-12) * norm_t * norm2(pdu);
            if d.abs() <= threshold {
                if *pdp >= T::zero() {
                    T::one()
                } else {
                    -T::one()
                }
            } else if d > T::zero() {
                T::one()
            } else {
                -T::one()
            }
        }
    };
    let dp0 = sigma * radius / norm_t;
    let mut delta_u: Vec<T> = du_t.iter().map(|t| *t * dp0).collect();
    let mut delta_p = dp0;

    let mut trial_u = vec![T::zero(); n];
    for it in 0..control.max_iterations {
        for i in 0..n {
            trial_u[i] = u[i] + delta_u[i];
        }
        let trial_p = p + delta_p;
        let r = model.residual(&trial_u, trial_p)?;
        if max_abs(&r) <= f_tol {
            return Ok(((delta_u, delta_p), it.max(1)));
        }

        model.tangent_stiffness(&trial_u, trial_p, k)?;
        let factor = k.ldlt()?;
        let du_bar: Vec<T> = factor.solve(&r).into_iter().map(|x| -x).collect();
        let q: Vec<T> =
            model.volume_gradient(&trial_u).iter().map(|g| *g * milli).collect();
        let du_t = factor.solve(&q);

        // Constraint circle: ||delta_u + du_bar + dp du_t|| = radius.
        let base: Vec<T> = delta_u.iter().zip(&du_bar).map(|(a, b)| *a + *b).collect();
        let a = dot(&du_t, &du_t);
        let b = of::<T>(2.0) * dot(&du_t, &base);
        let c = dot(&base, &base) - radius * radius;
        if a <= T::zero() || !a.is_finite() {
            return Err(Error::Solver("degenerate corrector tangent".into()));
        }
        let disc = b * b - of::<T>(4.0) * a * c;
        if disc < T::zero() || !disc.is_finite() {
            return Err(Error::Solver("arc-length constraint has no real root".into()));
        }
        let sq = disc.sqrt();
        let two_a = a + a;
        let roots = [(-b + sq) / two_a, (-b - sq) / two_a];
        // Keep the root whose resulting increment stays aligned with the
        // accumulated step.
        let score = |dp: T| -> T {
            let mut s = T::zero();
            for i in 0..n {
                s += (base[i] + dp * du_t[i]) * delta_u[i];
            }
            s
        };
        let dp = if score(roots[0]) >= score(roots[1]) { roots[0] } else { roots[1] };
        if !dp.is_finite() {
            return Err(Error::Solver("non-finite pressure correction".into()));
        }
        for i in 0..n {
            delta_u[i] = base[i] + dp * du_t[i];
        }
        delta_p += dp;
    }
    Err(Error::Solver("corrector did not converge".into()))
}

/// Newton solve of the volume-prescribed equilibrium `residual(u, p) = 0`,
/// `V_total(u, p) = v_target`, starting from `(u0, p0)`. The prescribed
/// quantity is the total cavity volume, body swell included.
pub fn equilibrium_at_volume<T: Real>(
    model: &MembraneModel<T>,
    v_target: T,
    u0: &[T],
    p0: T,
    residual_tol_rel: T,
) -> Result<(Vec<T>, T)> {
    let n = model.mesh().n_dofs();
    let f_tol = residual_tol_rel * model.characteristic_force();
    let v_tol = of::<T>(1e-10) * v_target.abs().max(T::one());
    let milli = of::<T>(1e-3);
    let c_body = model.body_compliance_mm3_per_kpa();
    let mut u = u0.to_vec();
    let mut p = p0;
    let mut k = BandedSymmetric::zeros(n, model.mesh().half_bandwidth());
    for _ in 0..60 {
        let r = model.residual(&u, p)?;
        let v = model.total_volume(&u, p);
        if max_abs(&r) <= f_tol && (v - v_target).abs() <= v_tol {
            return Ok((u, p));
        }
        model.tangent_stiffness(&u, p, &mut k)?;
        let factor = k.ldlt()?;
        let du_bar: Vec<T> = factor.solve(&r).into_iter().map(|x| -x).collect();
        let q: Vec<T> = model.volume_gradient(&u).iter().map(|g| *g * milli).collect();
        let du_t = factor.solve(&q);
        let g = model.volume_gradient(&u);
        let denom = dot(&g, &du_t) + c_body;
        if denom == T::zero() || !denom.is_finite() {
            return Err(Error::Solver("volume row made the bordered system singular".into()));
        }
        let dp = (v_target - v - dot(&g, &du_bar)) / denom;
        for i in 0..n {
            u[i] += du_bar[i] + dp * du_t[i];
        }
        p += dp;
        if !p.is_finite() {
            return Err(Error::NonFinite { context: "volume-controlled pressure".into() });
        }
    }
    Err(Error::Solver(format!("no equilibrium at volume {v_target}")))
}

/// Walk a sequence of volume targets with the volume-prescribed Newton
/// solve, substepping where a direct jump fails. Returns `(volume,
/// pressure, displacement)` per target.
pub fn volume_controlled_inflate<T: Real>(
    model: &MembraneModel<T>,
    targets: &[T],
    residual_tol_rel: T,
) -> Result<Vec<(T, T, Vec<T>)>> {
    let mut out = Vec::with_capacity(targets.len());
    let mut u = vec![T::zero(); model.mesh().n_dofs()];
    let mut p = T::zero();
    let mut v_from = model.total_volume(&u, p);
    for &v_target in targets {
        let mut stack = vec![v_target];
        let mut depth = 0;
        while let Some(v_next) = stack.pop() {
            match equilibrium_at_volume(model, v_next, &u, p, residual_tol_rel) {
                Ok((u_new, p_new)) => {
                    u = u_new;
                    p = p_new;
                    v_from = v_next;
                }
                Err(e) => {
                    depth += 1;
                    if depth > 40 {
                        return Err(e);
                    }
                    let mid = (v_from + v_next) * of::<T>(0.5);
                    stack.push(v_next);
                    stack.push(mid);
                }
            }
        }
        out.push((v_from, p, u.clone()));
    }
    Ok(out)
}
