//! Grasping scenarios: size filtering, the clamped bench test, and the
//! full press-to-grasp sequence on a closed circuit.
//!
//! The gripper holds two everting chambers behind flexure jaws separated
//! by a fixture gap. Geometry alone already filters objects: a membrane
//! everts by at most its snap displacement, so jaws can only squeeze
//! objects larger than the gap minus twice that stroke, and nothing wider
//! than the gap fits between them in the first place. Everything inside
//! that window is grasp-capable before any fluid mechanics runs.
//!
//! Two simulators share the trace format. The quasistatic bench test
//! inflates a single chamber against the flexure and a unilateral object
//! spring in series: the spring engages once the membrane has crossed the
//! contact gap, its compression saturates at the snap displacement, and
//! the extra blocked force divided by the effective membrane area lifts
//! the pressure path. With a vanishing object stiffness the composite
//! curve collapses back to the free chamber, snap and all. The full grasp
//! simulation instead presses the contact chamber of an assembled circuit
//! in displacement-controlled steps and lets the network cascade: the
//! grasp succeeds when every gripping chamber has snapped and the shared
//! pressure holds at or above the snap threshold with no source attached.
//!
//! A compliant object absorbs part of the press: the prescribed membrane
//! travel splits between squeezing the object and displacing liquid in
//! proportion to the object's stiffness against the membrane's own local
//! stiffness, so soft objects transmit a smaller displaced volume and
//! trigger later, if at all.

use crate::beam::{self, FixtureBeam, ObjectStiffness};
use crate::error::{Error, Result};
use crate::network::{ChamberRole, HydraulicNetwork, PvCharacteristic, SnapEvent};
use crate::path::{EquilibriumPath, PathSample, Termination};
use crate::pv;
use crate::scalar::{of, Real};

/// Default effective membrane area in mm^2, the circular footprint of the
/// standard chamber.
fn default_area<T: Real>() -> T {
    of::<T>(1452.0)
}

/// The thing being picked up.
#[derive(Debug, Clone, Copy)]
pub struct ObjectModel<T> {
    pub size_mm: T,
    pub stiffness: ObjectStiffness<T>,
}

/// Outcome of a grasp attempt or a pure feasibility check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraspOutcome {
    /// Too small for the everted jaws to reach.
    FilteredTooSmall,
    /// Wider than the fixture gap.
    FilteredTooLarge,
    /// Inside the size window; no simulation run yet.
    GraspCapable,
    /// Both gripping chambers snapped and the circuit holds the object.
    Grasped,
    /// The press ended without snapping the gripping chambers.
    NoTrigger,
}

/// Phase of a grasp or bench-test trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Membrane travelling freely, object not yet engaged.
    PreContact,
    /// Object spring engaged, chamber still on its rising branch.
    Contact,
    /// After the snap-through jump.
    PostSnap,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::PreContact => "I",
            Phase::Contact => "II",
            Phase::PostSnap => "III",
        })
    }
}

impl std::fmt::Display for GraspOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GraspOutcome::FilteredTooSmall => "filtered-too-small",
            GraspOutcome::FilteredTooLarge => "filtered-too-large",
            GraspOutcome::GraspCapable => "grasp-capable",
            GraspOutcome::Grasped => "grasped",
            GraspOutcome::NoTrigger => "no-trigger",
        })
    }
}

/// One sampled state of a grasp or bench-test run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspPoint<T> {
    pub volume_mm3: T,
    pub pressure_kpa: T,
    /// Membrane travel in mm; the bench test saturates it at the snap
    /// displacement, the press sequence reports the prescribed approach.
    pub displacement_mm: T,
    /// Force on the object in N.
    pub force_n: T,
    pub phase: Phase,
}

/// Series of grasp states with the run's verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspTrace<T> {
    /// Volume origin of the series: the chamber rest volume for the bench
    /// test, zero for a press sequence measured in displaced volume.
    pub rest_volume_mm3: T,
    pub points: Vec<GraspPoint<T>>,
    pub outcome: GraspOutcome,
    pub truncated: bool,
}

/// Rig parameters of the quasistatic bench test.
#[derive(Debug, Clone, Copy)]
pub struct ClampRig<T> {
    pub object: ObjectStiffness<T>,
    /// Converts membrane travel to displaced volume and force to pressure.
    pub effective_area_mm2: T,
    /// Free travel before the membrane meets the object, mm.
    pub contact_gap_mm: T,
    /// Full eversion stroke of the membrane, mm.
    pub snap_displacement_mm: T,
}

impl<T: Real> ClampRig<T> {
    pub fn new(object: ObjectStiffness<T>) -> Self {
        Self {
            object,
            effective_area_mm2: default_area(),
            contact_gap_mm: of::<T>(2.0),
            snap_displacement_mm: of::<T>(10.0),
        }
    }

    fn validate(&self) -> Result<()> {
        self.object.validate()?;
        if !(self.effective_area_mm2 > T::zero()) {
            return Err(Error::Scenario("effective area must be positive".into()));
        }
        if !(self.contact_gap_mm >= T::zero()) {
            return Err(Error::Scenario("contact gap must be non-negative".into()));
        }
        if !(self.snap_displacement_mm > self.contact_gap_mm) {
            return Err(Error::Scenario(
                "snap displacement must exceed the contact gap".into(),
            ));
        }
        Ok(())
    }
}

/// A full pick-up attempt on an assembled circuit.
#[derive(Debug, Clone)]
pub struct GraspScenario<T> {
    pub network: HydraulicNetwork<T>,
    /// Flexure carrying each jaw.
    pub fixture: FixtureBeam<T>,
    /// Absent for a free dry run of the press sequence.
    pub object: Option<ObjectModel<T>>,
    /// Opening between the two jaws at rest, mm.
    pub fixture_gap_mm: T,
    pub contact_gap_mm: T,
    pub snap_displacement_mm: T,
    /// Area converting contact membrane travel to displaced volume.
    pub contact_area_mm2: T,
    /// Pressure the circuit must hold for the grasp to count; defaults to
    /// the gripping chambers' snap threshold.
    pub hold_pressure_kpa: Option<T>,
    /// Displaced-volume budget of the press; defaults to everything the
    /// contact chamber can give up within its characteristic.
    pub press_volume_mm3: Option<T>,
}

impl<T: Real> GraspScenario<T> {
    pub fn new(network: HydraulicNetwork<T>, fixture: FixtureBeam<T>, fixture_gap_mm: T) -> Self {
        Self {
            network,
            fixture,
            object: None,
            fixture_gap_mm,
            contact_gap_mm: of::<T>(2.0),
            snap_displacement_mm: of::<T>(10.0),
            contact_area_mm2: default_area(),
            hold_pressure_kpa: None,
            press_volume_mm3: None,
        }
    }

    pub fn with_object(mut self, object: ObjectModel<T>) -> Self {
        self.object = Some(object);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.fixture_gap_mm > T::zero()) {
            return Err(Error::Scenario("fixture gap must be positive".into()));
        }
        if !(self.contact_gap_mm >= T::zero()) {
            return Err(Error::Scenario("contact gap must be non-negative".into()));
        }
        if !(self.snap_displacement_mm > T::zero()) {
            return Err(Error::Scenario("snap displacement must be positive".into()));
        }
        if !(self.contact_area_mm2 > T::zero()) {
            return Err(Error::Scenario("contact area must be positive".into()));
        }
        if let Some(obj) = &self.object {
            obj.stiffness.validate()?;
            if !(obj.size_mm > T::zero()) {
                return Err(Error::Scenario("object size must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Result of a full grasp simulation.
#[derive(Debug, Clone)]
pub struct GraspResult<T> {
    pub trace: GraspTrace<T>,
    /// Circuit state at the end of the press, holding if grasped.
    pub network: HydraulicNetwork<T>,
    pub events: Vec<SnapEvent<T>>,
}

impl<T> GraspResult<T> {
    pub fn outcome(&self) -> GraspOutcome {
        self.trace.outcome
    }
}

/// Graspable object sizes `(low, high)` in mm for a jaw opening and a
/// membrane stroke: jaws reach inward by at most one stroke each, and
/// nothing wider than the opening fits.
pub fn size_window<T: Real>(fixture_gap_mm: T, snap_displacement_mm: T) -> (T, T) {
    let lo = (fixture_gap_mm - of::<T>(2.0) * snap_displacement_mm).max(T::zero());
    (lo, fixture_gap_mm)
}

/// Pure geometric filter: sizes at or below the window bottom cannot be
/// reached by the everted jaws, sizes at or above the top do not fit.
pub fn classify_size<T: Real>(size_mm: T, fixture_gap_mm: T, snap_displacement_mm: T) -> GraspOutcome {
    let (lo, hi) = size_window(fixture_gap_mm, snap_displacement_mm);
    if size_mm <= lo {
        GraspOutcome::FilteredTooSmall
    } else if size_mm >= hi {
        GraspOutcome::FilteredTooLarge
    } else {
        GraspOutcome::GraspCapable
    }
}

/// Filter a scenario by geometry alone, without running the circuit. A
/// scenario with no object is trivially capable.
pub fn grasp_feasibility<T: Real>(scenario: &GraspScenario<T>) -> Result<GraspOutcome> {
    scenario.validate()?;
    Ok(match &scenario.object {
        None => GraspOutcome::GraspCapable,
        Some(obj) => {
            classify_size(obj.size_mm, scenario.fixture_gap_mm, scenario.snap_displacement_mm)
        }
    })
}

/// Assign phases from the numbers alone: pre-contact while the membrane
/// travel is below the gap, contact from there to the first snap jump,
/// post-snap beyond. A jump shows up as two consecutive points at the
/// same volume with different pressure. Idempotent by construction.
pub fn detect_phases<T: Real>(points: &[GraspPoint<T>], contact_gap_mm: T) -> Vec<Phase> {
    let mut jumped = false;
    let mut phases = Vec::with_capacity(points.len());
    for (i, pt) in points.iter().enumerate() {
        if i > 0
            && points[i - 1].volume_mm3 == pt.volume_mm3
            && points[i - 1].pressure_kpa != pt.pressure_kpa
        {
            jumped = true;
        }
        phases.push(if jumped {
            Phase::PostSnap
        } else if pt.displacement_mm >= contact_gap_mm {
            Phase::Contact
        } else {
            Phase::PreContact
        });
    }
    phases
}

/// Inflate one chamber against the flexure and object spring in series
/// and walk the composite volume-controlled path, snap included.
///
/// The spring engages at the contact gap and its compression saturates at
/// the snap displacement; its blocked force over the effective area adds
/// to the chamber pressure. The outcome is always `NoTrigger`: the bench
/// test measures the clamp, it does not pick anything up.
pub fn simulate_quasistatic_test<T: Real>(
    characteristic: &PvCharacteristic<T>,
    fixture: &FixtureBeam<T>,
    rig: &ClampRig<T>,
) -> Result<GraspTrace<T>> {
    rig.validate()?;
    let k_b = beam::stiffness(fixture)?;
    let k_eq = beam::series_stiffness(k_b, rig.object)?;
    let v0 = characteristic.samples()[0].volume_mm3;
    let area = rig.effective_area_mm2;
    let kilo = of::<T>(1000.0);

    let travel = |v: T| ((v - v0) / area).max(T::zero()).min(rig.snap_displacement_mm);
    let squeeze = |v: T| (travel(v) - rig.contact_gap_mm).max(T::zero());

    let composite: Vec<PathSample<T>> = characteristic
        .samples()
        .iter()
        .map(|s| PathSample {
            volume_mm3: s.volume_mm3,
            pressure_kpa: s.pressure_kpa + kilo * k_eq * squeeze(s.volume_mm3) / area,
            apex_z_mm: T::zero(),
            stable: s.stable,
            negative_pivots: usize::from(!s.stable),
        })
        .collect();
    let last_v = composite.last().map_or(T::zero(), |s| s.volume_mm3);
    let path = EquilibriumPath::from_samples(composite, Termination::VolumeCap { volume_mm3: last_v })?;
    let walked = pv::snap_path(&path)?;

    let mut points: Vec<GraspPoint<T>> = walked
        .points
        .iter()
        .map(|&(v, p)| GraspPoint {
            volume_mm3: v,
            pressure_kpa: p,
            displacement_mm: travel(v),
            force_n: k_eq * squeeze(v),
            phase: Phase::PreContact,
        })
        .collect();
    let phases = detect_phases(&points, rig.contact_gap_mm);
    for (pt, ph) in points.iter_mut().zip(phases) {
        pt.phase = ph;
    }
    Ok(GraspTrace {
        rest_volume_mm3: v0,
        points,
        outcome: GraspOutcome::NoTrigger,
        truncated: walked.truncated,
    })
}

/// Pressure at a given volume injected beyond rest, read off the first
/// rising pass of the trace. This is the blocked-pressure plateau the
/// clamping experiments quote at a reference injection.
pub fn plateau_pressure<T: Real>(trace: &GraspTrace<T>, injected_mm3: T) -> Result<T> {
    let vq = trace.rest_volume_mm3 + injected_mm3;
    for w in trace.points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.volume_mm3 > a.volume_mm3 && a.volume_mm3 <= vq && vq <= b.volume_mm3 {
            let f = (vq - a.volume_mm3) / (b.volume_mm3 - a.volume_mm3);
            return Ok(a.pressure_kpa + f * (b.pressure_kpa - a.pressure_kpa));
        }
    }
    Err(Error::OutOfCoverage(format!(
        "no rising trace segment covers {vq} mm^3"
    )))
}

/// Fraction of the prescribed press an object of the given stiffness
/// actually transmits as displaced liquid; the rest compresses the
/// object. The membrane's own stiffness comes from the characteristic
/// slope at the node's current state.
fn press_transmission<T: Real>(
    network: &HydraulicNetwork<T>,
    contact_id: &str,
    area_mm2: T,
    stiffness: Option<ObjectStiffness<T>>,
) -> Result<T> {
    let k_o = match stiffness {
        None | Some(ObjectStiffness::Rigid) => return Ok(T::one()),
        Some(ObjectStiffness::Finite(k)) => k,
    };
    let node = network.node(contact_id)?;
    let ch = node.characteristic();
    let p0 = network.pressure_kpa();
    let h = of::<T>(1e-3) * (T::one() + p0.abs());
    let dv = ch.volume_at(node.branch(), p0 + h) - ch.volume_at(node.branch(), p0 - h);
    let dvdp = dv / (of::<T>(2.0) * h);
    if !(dvdp > T::zero()) {
        return Ok(T::one());
    }
    // Membrane stiffness in N/mm: (dp/dV) * A^2, with kPa*mm -> N/1000.
    let k_m = area_mm2 * area_mm2 / (of::<T>(1000.0) * dvdp);
    Ok(k_o / (k_o + k_m))
}

/// Press the contact chamber of the scenario's circuit in equal
/// displacement steps and let the network cascade.
///
/// Geometry filters first and filtered runs never touch the circuit. The
/// press is displacement-controlled: the approach drives the membrane,
/// while a compliant object reduces the transmitted displaced volume. The
/// run stops early once every gripping chamber has snapped and the shared
/// pressure holds at or above the hold threshold; the result's network is
/// then the held, source-free state.
pub fn simulate_grasp<T: Real>(
    scenario: &GraspScenario<T>,
    press_steps: usize,
) -> Result<GraspResult<T>> {
    scenario.validate()?;
    if press_steps == 0 {
        return Err(Error::Scenario("press needs at least one step".into()));
    }
    let feasibility = grasp_feasibility(scenario)?;
    if matches!(
        feasibility,
        GraspOutcome::FilteredTooSmall | GraspOutcome::FilteredTooLarge
    ) {
        let net = scenario.network.clone();
        let point = GraspPoint {
            volume_mm3: T::zero(),
            pressure_kpa: net.pressure_kpa(),
            displacement_mm: T::zero(),
            force_n: T::zero(),
            phase: Phase::PreContact,
        };
        return Ok(GraspResult {
            trace: GraspTrace {
                rest_volume_mm3: T::zero(),
                points: vec![point],
                outcome: feasibility,
                truncated: false,
            },
            network: net,
            events: Vec::new(),
        });
    }

    let contact_id = scenario
        .network
        .nodes()
        .iter()
        .find(|n| n.role() == ChamberRole::Contact)
        .map(|n| n.id().to_owned())
        .ok_or_else(|| Error::Scenario("the circuit has no contact chamber".into()))?;
    let grip_ids: Vec<String> = scenario
        .network
        .nodes()
        .iter()
        .filter(|n| n.role() == ChamberRole::Gripping)
        .map(|n| n.id().to_owned())
        .collect();
    if grip_ids.is_empty() {
        return Err(Error::Scenario("the circuit has no gripping chambers".into()));
    }

    let contact = scenario.network.node(&contact_id)?;
    let supply = contact.assembly_volume_mm3() - contact.characteristic().min_volume_mm3();
    let budget = scenario
        .press_volume_mm3
        .map_or(supply, |v| v.min(supply))
        .max(T::zero());
    let hold_p = scenario.hold_pressure_kpa.map_or_else(
        || {
            grip_ids
                .iter()
                .filter_map(|id| {
                    scenario.network.node(id).ok()?.characteristic().snap_pressure_kpa()
                })
                .fold(T::infinity(), T::min)
        },
        |p| p,
    );
    let eta = press_transmission(
        &scenario.network,
        &contact_id,
        scenario.contact_area_mm2,
        scenario.object.as_ref().map(|o| o.stiffness),
    )?;

    let mut net = scenario.network.clone();
    let mut events: Vec<SnapEvent<T>> = Vec::new();
    let row = |press: T, net: &HydraulicNetwork<T>| GraspPoint {
        volume_mm3: press * eta,
        pressure_kpa: net.pressure_kpa(),
        displacement_mm: press / scenario.contact_area_mm2,
        force_n: net.pressure_kpa() * scenario.contact_area_mm2 / of::<T>(1000.0),
        phase: Phase::PreContact,
    };
    let mut points = vec![row(T::zero(), &net)];
    let mut outcome = GraspOutcome::NoTrigger;
    let mut first_snap_row: Option<usize> = None;
    let mut truncated = false;
    for k in 1..=press_steps {
        let press = budget * of::<T>(k as f64) / of::<T>(press_steps as f64);
        // A press that drives some chamber past its characteristic
        // coverage ends the attempt at the last representable state, the
        // same way an over-long injection truncates its trace.
        let (next, step_events) = match net.with_contact_displacement(&contact_id, press * eta) {
            Ok(advanced) => advanced,
            Err(Error::InfeasibleVolume(_)) | Err(Error::OutOfCoverage(_)) => {
                truncated = true;
                break;
            }
            Err(other) => return Err(other),
        };
        net = next;
        if !step_events.is_empty() && first_snap_row.is_none() {
            first_snap_row = Some(points.len());
        }
        events.extend(step_events);
        points.push(row(press, &net));
        let all_snapped = grip_ids
            .iter()
            .all(|g| events.iter().any(|e| &e.node_id == g));
        if all_snapped && net.pressure_kpa() >= hold_p {
            outcome = GraspOutcome::Grasped;
            break;
        }
    }
    for (i, pt) in points.iter_mut().enumerate() {
        pt.phase = match first_snap_row {
            Some(r) if i >= r => Phase::PostSnap,
            _ if pt.displacement_mm >= scenario.contact_gap_mm => Phase::Contact,
            _ => Phase::PreContact,
        };
    }
    Ok(GraspResult {
        trace: GraspTrace {
            rest_volume_mm3: T::zero(),
            points,
            outcome,
            truncated,
        },
        network: net,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::CharSample;
    use approx::assert_relative_eq;

    fn sample(v: f64, p: f64, stable: bool) -> CharSample<f64> {
        CharSample { volume_mm3: v, pressure_kpa: p, stable }
    }

    /// Synthetic S-curve with a 6 kPa snap threshold.
    fn snap_char() -> PvCharacteristic<f64> {
        PvCharacteristic::from_samples(vec![
            sample(1000.0, 0.0, true),
            sample(2000.0, 6.0, true),
            sample(1900.0, -1.0, false),
            sample(1920.0, 6.0, true),
            sample(3000.0, 14.0, true),
        ])
        .unwrap()
    }

    /// Long monotone characteristic for plateau arithmetic, sampled every
    /// 500 mm^3 so the reference injection of 3500 lands on a sample.
    fn ramp_char() -> PvCharacteristic<f64> {
        let samples = (0..=60)
            .map(|k| {
                let v = 1000.0 + 500.0 * k as f64;
                sample(v, (v - 1000.0) / 1000.0, true)
            })
            .collect();
        PvCharacteristic::from_samples(samples).unwrap()
    }

    fn gripper() -> HydraulicNetwork<f64> {
        let contact = snap_char().scaled(1.0, 5.0).unwrap();
        HydraulicNetwork::standard_gripper(contact, snap_char()).unwrap()
    }

    fn rigid_object(size: f64) -> ObjectModel<f64> {
        ObjectModel { size_mm: size, stiffness: ObjectStiffness::Rigid }
    }

    #[test]
    fn size_window_matches_hand_values() {
        assert_eq!(size_window(40.0, 10.0), (20.0, 40.0));
        assert_eq!(size_window(100.0, 10.0), (80.0, 100.0));
        assert_eq!(size_window(15.0, 10.0), (0.0, 15.0));
    }

    #[test]
    fn size_classification_splits_the_window() {
        assert_eq!(classify_size(15.0, 40.0, 10.0), GraspOutcome::FilteredTooSmall);
        assert_eq!(classify_size(30.0, 40.0, 10.0), GraspOutcome::GraspCapable);
        assert_eq!(classify_size(50.0, 40.0, 10.0), GraspOutcome::FilteredTooLarge);
        // Boundaries filter: touching jaws cannot squeeze, a flush fit
        // cannot enter.
        assert_eq!(classify_size(20.0, 40.0, 10.0), GraspOutcome::FilteredTooSmall);
        assert_eq!(classify_size(40.0, 40.0, 10.0), GraspOutcome::FilteredTooLarge);
    }

    #[test]
    fn vanishing_object_stiffness_recovers_the_free_snap() {
        let ch = snap_char();
        let fixture = FixtureBeam::default_template();
        let rig = ClampRig {
            effective_area_mm2: 100.0,
            ..ClampRig::new(ObjectStiffness::Finite(1e-9))
        };
        let trace = simulate_quasistatic_test(&ch, &fixture, &rig).unwrap();

        let free = {
            let samples: Vec<PathSample<f64>> = ch
                .samples()
                .iter()
                .map(|s| PathSample {
                    volume_mm3: s.volume_mm3,
                    pressure_kpa: s.pressure_kpa,
                    apex_z_mm: 0.0,
                    stable: s.stable,
                    negative_pivots: usize::from(!s.stable),
                })
                .collect();
            let path =
                EquilibriumPath::from_samples(samples, Termination::VolumeCap { volume_mm3: 3000.0 })
                    .unwrap();
            pv::snap_path(&path).unwrap()
        };
        assert_eq!(trace.points.len(), free.points.len());
        for (pt, &(v, p)) in trace.points.iter().zip(&free.points) {
            assert_relative_eq!(pt.volume_mm3, v, max_relative = 1e-12);
            assert_relative_eq!(pt.pressure_kpa, p, epsilon = 1e-6);
        }
    }

    #[test]
    fn stiffer_objects_raise_the_blocked_pressure_plateau() {
        let ch = ramp_char();
        let fixture = FixtureBeam::default_template();
        let query = 3500.0;
        let mut last = f64::NEG_INFINITY;
        for k_o in [0.5, 2.0, 5.0, 12.0, 50.0] {
            let rig = ClampRig {
                effective_area_mm2: 1080.0,
                ..ClampRig::new(ObjectStiffness::Finite(k_o))
            };
            let trace = simulate_quasistatic_test(&ch, &fixture, &rig).unwrap();
            let p = plateau_pressure(&trace, query).unwrap();
            assert!(p > last, "plateau must rise with object stiffness");
            last = p;
        }
    }

    #[test]
    fn plateau_matches_the_series_spring_formula_on_a_ramp() {
        let ch = ramp_char();
        let fixture = FixtureBeam::default_template();
        let k_o = 12.0;
        let rig = ClampRig {
            effective_area_mm2: 1080.0,
            ..ClampRig::new(ObjectStiffness::Finite(k_o))
        };
        let trace = simulate_quasistatic_test(&ch, &fixture, &rig).unwrap();
        let k_b = beam::stiffness(&fixture).unwrap();
        let k_eq = k_b * k_o / (k_b + k_o);
        let injected = 3500.0;
        let p_chamber = injected / 1000.0;
        let squeeze = injected / 1080.0 - 2.0;
        let expect = p_chamber + 1000.0 * k_eq * squeeze / 1080.0;
        let got = plateau_pressure(&trace, injected).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-9);
    }

    #[test]
    fn bench_phases_are_contiguous_and_stable_under_refinement() {
        let ch = snap_char();
        let fixture = FixtureBeam::default_template();
        let rig = ClampRig {
            effective_area_mm2: 100.0,
            ..ClampRig::new(ObjectStiffness::Finite(0.5))
        };
        let trace = simulate_quasistatic_test(&ch, &fixture, &rig).unwrap();
        let phases: Vec<Phase> = trace.points.iter().map(|p| p.phase).collect();
        // Contiguity: once a later phase starts, earlier ones never recur.
        let mut rank_seen = 0usize;
        for ph in &phases {
            let rank = match ph {
                Phase::PreContact => 0,
                Phase::Contact => 1,
                Phase::PostSnap => 2,
            };
            assert!(rank >= rank_seen, "phases must not regress");
            rank_seen = rank;
        }
        assert!(phases.contains(&Phase::PreContact));
        assert!(phases.contains(&Phase::Contact));
        assert!(phases.contains(&Phase::PostSnap));
        // Idempotent relabeling.
        let again = detect_phases(&trace.points, rig.contact_gap_mm);
        assert_eq!(phases, again);

        // Refine the characteristic twofold; the phase boundary volumes
        // must match within one original sample spacing.
        let s = ch.samples();
        let mut refined = Vec::new();
        for i in 0..s.len() - 1 {
            refined.push(s[i]);
            refined.push(CharSample {
                volume_mm3: 0.5 * (s[i].volume_mm3 + s[i + 1].volume_mm3),
                pressure_kpa: 0.5 * (s[i].pressure_kpa + s[i + 1].pressure_kpa),
                stable: s[i].stable && s[i + 1].stable,
            });
        }
        refined.push(*s.last().unwrap());
        let ch2 = PvCharacteristic::from_samples(refined).unwrap();
        let trace2 = simulate_quasistatic_test(&ch2, &fixture, &rig).unwrap();
        let boundary = |t: &GraspTrace<f64>, ph: Phase| {
            t.points.iter().find(|p| p.phase == ph).map(|p| p.volume_mm3)
        };
        let spacing = 1100.0; // coarsest volume gap in the synthetic curve
        for ph in [Phase::Contact, Phase::PostSnap] {
            let (b1, b2) = (boundary(&trace, ph).unwrap(), boundary(&trace2, ph).unwrap());
            assert!((b1 - b2).abs() <= spacing, "phase {ph:?} moved {b1} -> {b2}");
        }
    }

    #[test]
    fn filtered_objects_never_touch_the_circuit() {
        let net = gripper();
        let p0 = net.pressure_kpa();
        for (size, expect) in [
            (15.0, GraspOutcome::FilteredTooSmall),
            (50.0, GraspOutcome::FilteredTooLarge),
        ] {
            let scenario = GraspScenario::new(net.clone(), FixtureBeam::default_template(), 40.0)
                .with_object(rigid_object(size));
            let result = simulate_grasp(&scenario, 32).unwrap();
            assert_eq!(result.outcome(), expect);
            assert!(result.events.is_empty());
            assert_eq!(result.network.pressure_kpa(), p0);
            assert_eq!(result.trace.points.len(), 1);
        }
    }

    #[test]
    fn rigid_object_in_window_is_grasped_and_holds_source_free() {
        let scenario = GraspScenario::new(gripper(), FixtureBeam::default_template(), 40.0)
            .with_object(rigid_object(30.0));
        let result = simulate_grasp(&scenario, 64).unwrap();
        assert_eq!(result.outcome(), GraspOutcome::Grasped);
        assert_eq!(result.events.len(), 2);
        assert!(result.network.pressure_kpa() >= 6.0);

        // Source-free hold: zero injection leaves the pressure untouched.
        let (held, trace, events) = result.network.inject(0.0, 60.0, 100).unwrap();
        assert!(events.is_empty());
        assert_eq!(held.pressure_kpa(), result.network.pressure_kpa());
        for row in &trace.rows {
            assert_eq!(row.pressure_kpa, result.network.pressure_kpa());
        }
    }

    #[test]
    fn short_press_gives_no_trigger_and_reverses_cleanly() {
        let net = gripper();
        let mut scenario = GraspScenario::new(net.clone(), FixtureBeam::default_template(), 40.0)
            .with_object(rigid_object(30.0));
        scenario.press_volume_mm3 = Some(1500.0);
        let result = simulate_grasp(&scenario, 16).unwrap();
        assert_eq!(result.outcome(), GraspOutcome::NoTrigger);
        assert!(result.events.is_empty());
        assert!(result.network.pressure_kpa() < 6.0);

        let contact_id = net
            .nodes()
            .iter()
            .find(|n| n.role() == ChamberRole::Contact)
            .unwrap()
            .id()
            .to_owned();
        let (released, events) =
            result.network.with_contact_displacement(&contact_id, 0.0).unwrap();
        assert!(events.is_empty());
        for (a, b) in released.nodes().iter().zip(net.nodes()) {
            assert_relative_eq!(a.volume_mm3(), b.volume_mm3(), max_relative = 1e-9);
        }
    }

    #[test]
    fn soft_objects_transmit_less_press_than_rigid_ones() {
        let base = GraspScenario::new(gripper(), FixtureBeam::default_template(), 40.0);
        let mut rigid = base.clone().with_object(rigid_object(30.0));
        let mut soft = base.with_object(ObjectModel {
            size_mm: 30.0,
            stiffness: ObjectStiffness::Finite(2.0),
        });
        // A press budget the rigid object turns into a grasp but the soft
        // one, attenuated, does not.
        rigid.press_volume_mm3 = Some(2600.0);
        soft.press_volume_mm3 = Some(2600.0);
        let r = simulate_grasp(&rigid, 32).unwrap();
        let s = simulate_grasp(&soft, 32).unwrap();
        assert_eq!(r.outcome(), GraspOutcome::Grasped);
        assert_eq!(s.outcome(), GraspOutcome::NoTrigger);
        assert!(s.network.pressure_kpa() < r.network.pressure_kpa());
    }

    #[test]
    fn free_dry_run_presses_to_the_full_supply() {
        let scenario = GraspScenario::new(gripper(), FixtureBeam::default_template(), 40.0);
        let result = simulate_grasp(&scenario, 64).unwrap();
        // No object: the full supply is pressed, which is past the
        // trigger threshold of the synthetic curve.
        assert_eq!(result.outcome(), GraspOutcome::Grasped);
        assert_eq!(result.events.len(), 2);
    }

    #[test]
    fn press_past_grip_coverage_truncates_instead_of_erroring() {
        // An unreachable hold pressure keeps the press climbing after the
        // snap until the grips run out of characteristic; the attempt
        // must end in a truncated trace, not an error.
        let mut scenario = GraspScenario::new(gripper(), FixtureBeam::default_template(), 40.0);
        scenario.hold_pressure_kpa = Some(100.0);
        let result = simulate_grasp(&scenario, 64).unwrap();
        assert!(result.trace.truncated);
        assert_eq!(result.outcome(), GraspOutcome::NoTrigger);
        assert_eq!(result.events.len(), 2);
        let supply = 5.0 * (1900.0 + 20.0 / 7.0) - 5000.0;
        let last = result.trace.points.last().unwrap();
        assert!(last.volume_mm3 < supply - 1.0);
        assert!(result.network.pressure_kpa() < 14.0);
    }
}
