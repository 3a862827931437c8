//! Closed-circuit behavior on real traced chamber characteristics: the
//! relaxed assembly, injection-driven snap of both gripping chambers, and
//! the displacement budget of the contact chamber.

use std::sync::OnceLock;

use approx::assert_relative_eq;
use snapgrip_core::geometry::ChamberGeometry;
use snapgrip_core::materials::MaterialParams;
use snapgrip_core::membrane::continuation::ContinuationControl;
use snapgrip_core::network::{HydraulicNetwork, PvCharacteristic};
use snapgrip_core::pv::chamber_path;

fn dragon_skin() -> MaterialParams<f64> {
    MaterialParams::incompressible(0.1, 1080.0).unwrap()
}

fn characteristic(geo: &ChamberGeometry<f64>) -> PvCharacteristic<f64> {
    let path = chamber_path(geo, &dragon_skin(), 48, &ContinuationControl::default()).unwrap();
    PvCharacteristic::from_path(&path).unwrap()
}

fn chars() -> &'static (PvCharacteristic<f64>, PvCharacteristic<f64>) {
    static CHARS: OnceLock<(PvCharacteristic<f64>, PvCharacteristic<f64>)> = OnceLock::new();
    CHARS.get_or_init(|| {
        (
            characteristic(&ChamberGeometry::contact(45.0)),
            characteristic(&ChamberGeometry::gripping(45.0)),
        )
    })
}

#[test]
fn traced_curves_have_the_s_shape_the_circuit_needs() {
    let (contact, gripping) = chars();
    for (name, ch) in [("contact", contact), ("gripping", gripping)] {
        assert_eq!(ch.n_branches(), 3, "{name}: rise, fold-back, evert");
        assert!(ch.branch_is_stable(0), "{name}: rest branch stable");
        assert!(!ch.branch_is_stable(1), "{name}: fold-back unstable");
        assert!(ch.branch_is_stable(2), "{name}: everted branch stable");
        let (lo, hi) = ch.branch_pressure_range(2);
        assert!(lo < 0.0 && hi > 0.0, "{name}: everted branch crosses p = 0");
        assert!(ch.snap_pressure_kpa().unwrap() > 0.0);
    }
    // The gripping chamber snaps harder than the wider contact chamber.
    assert!(gripping.snap_pressure_kpa().unwrap() < contact.snap_pressure_kpa().unwrap());
}

#[test]
fn relaxed_assembly_sits_at_zero_pressure() {
    let (contact, gripping) = chars();
    let net = HydraulicNetwork::standard_gripper(contact.clone(), gripping.clone()).unwrap();
    assert_relative_eq!(net.pressure_kpa(), 0.0, epsilon = 1e-9);
    assert_relative_eq!(net.stored_volume_mm3(), net.total_liquid_mm3(), max_relative = 1e-12);
    // Contact pre-snapped onto the everted branch, grips at rest.
    assert_eq!(net.node("contact").unwrap().branch(), 2);
    assert_eq!(net.node("grip1").unwrap().branch(), 0);
    assert_eq!(net.node("grip2").unwrap().branch(), 0);
    let v1 = net.node("grip1").unwrap().volume_mm3();
    let v2 = net.node("grip2").unwrap().volume_mm3();
    assert_eq!(v1, v2);
}

#[test]
fn injection_snaps_both_grips_together_and_isochorically() {
    let (contact, gripping) = chars();
    let net = HydraulicNetwork::standard_gripper(contact.clone(), gripping.clone()).unwrap();
    let p_s = gripping.snap_pressure_kpa().unwrap();

    // Inject well past the gripping fold budget in coarse steps.
    let (after, trace, events) = net.inject(600.0, 60.0, 120).unwrap();
    assert_eq!(events.len(), 2, "both gripping chambers snap, once each");
    let mut ids: Vec<&str> = events.iter().map(|e| e.node_id.as_str()).collect();
    ids.sort_unstable();
    assert_eq!(ids, ["grip1", "grip2"]);
    for ev in &events {
        assert_relative_eq!(ev.pressure_before_kpa, p_s, max_relative = 1e-6);
        assert!(ev.volume_after_mm3 > ev.volume_before_mm3, "snap everts outward");
    }
    // The jump is isochoric at network level: every row keeps the budget.
    for row in &trace.rows {
        let held: f64 = row.node_volumes_mm3.iter().sum();
        assert_relative_eq!(held, row.total_liquid_mm3, max_relative = 1e-9);
    }
    // Post-snap the grips ride the everted branch and symmetry holds.
    assert_eq!(after.node("grip1").unwrap().branch(), 2);
    assert_eq!(after.node("grip2").unwrap().branch(), 2);
    assert_eq!(
        after.node("grip1").unwrap().volume_mm3(),
        after.node("grip2").unwrap().volume_mm3()
    );

    // Determinism: the identical run reproduces the pressure bit for bit.
    let (again, _, _) = net.inject(600.0, 60.0, 120).unwrap();
    assert_eq!(after.pressure_kpa(), again.pressure_kpa());
}

#[test]
fn contact_displacement_budget_cannot_snap_the_real_grips() {
    let (contact, gripping) = chars();
    let net = HydraulicNetwork::standard_gripper(contact.clone(), gripping.clone()).unwrap();
    // The deepest in-coverage press of the contact chamber.
    let supply = net.node("contact").unwrap().assembly_volume_mm3()
        - contact.min_volume_mm3();
    assert!(supply > 0.0);
    let (pressed, events) = net.with_contact_displacement("contact", supply).unwrap();
    // The traced geometry cannot displace enough liquid to fold the
    // grips; the press only pressurizes the circuit.
    assert!(events.is_empty());
    assert!(pressed.pressure_kpa() > 0.0);
    assert!(pressed.pressure_kpa() < gripping.snap_pressure_kpa().unwrap());

    // Releasing the press restores the relaxed assembly.
    let (released, rel_events) = pressed.with_contact_displacement("contact", 0.0).unwrap();
    assert!(rel_events.is_empty());
    for (a, b) in released.nodes().iter().zip(net.nodes()) {
        assert_relative_eq!(a.volume_mm3(), b.volume_mm3(), max_relative = 1e-9);
    }
}
