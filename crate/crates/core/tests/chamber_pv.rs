//! Chamber-level checks of the traced paths and their bistability
//! classification: material scaling, mesh convergence, work-energy
//! consistency, and a two-angle sweep.

use approx::assert_relative_eq;
use snapgrip_core::geometry::ChamberGeometry;
use snapgrip_core::materials::MaterialParams;
use snapgrip_core::membrane::continuation::{
    equilibrium_at_volume, ContinuationControl,
};
use snapgrip_core::membrane::MembraneModel;
use snapgrip_core::mesh::MeridianMesh;
use snapgrip_core::pv::{chamber_path, critical_pressure, tilt_sweep};

fn dragon_skin() -> MaterialParams<f64> {
    MaterialParams::incompressible(0.1, 1080.0).unwrap()
}

/// Pressures scale with the material constant while the path geometry
/// stays fixed: the body compliance shrinks exactly as fast as the
/// pressures grow, so total volumes are unchanged sample for sample.
#[test]
fn stiffer_material_scales_pressures_and_keeps_volumes() {
    let geo = ChamberGeometry::gripping(40.0);
    let control = ContinuationControl::default();
    let factor = 2.7;
    let base = chamber_path(&geo, &dragon_skin(), 48, &control).unwrap();
    let stiff =
        chamber_path(&geo, &dragon_skin().scaled(factor).unwrap(), 48, &control).unwrap();

    assert_eq!(base.len(), stiff.len());
    for (a, b) in base.samples().iter().zip(stiff.samples()) {
        assert_relative_eq!(b.pressure_kpa, factor * a.pressure_kpa, max_relative = 1e-9);
        assert_relative_eq!(b.volume_mm3, a.volume_mm3, max_relative = 1e-9);
        assert_eq!(a.stable, b.stable);
    }

    let cp_a = critical_pressure(&base).unwrap();
    let cp_b = critical_pressure(&stiff).unwrap();
    assert_relative_eq!(cp_b.p_s_kpa, factor * cp_a.p_s_kpa, max_relative = 1e-9);
}

/// Halving the element size moves the snap pressure by well under 2%.
#[test]
fn snap_pressure_converges_under_mesh_refinement() {
    let geo = ChamberGeometry::gripping(40.0);
    let control = ContinuationControl::default();
    let coarse = chamber_path(&geo, &dragon_skin(), 48, &control).unwrap();
    let fine = chamber_path(&geo, &dragon_skin(), 96, &control).unwrap();
    let p_coarse = critical_pressure(&coarse).unwrap().p_s_kpa;
    let p_fine = critical_pressure(&fine).unwrap().p_s_kpa;
    assert!(
        ((p_coarse - p_fine) / p_fine).abs() < 0.02,
        "p_s drifted {:.3}% between 48 and 96 elements",
        100.0 * ((p_coarse - p_fine) / p_fine).abs()
    );
}

/// Work pumped in equals stored energy gained along the stable rising
/// branch: the pressure-volume integral of the quasistatic states matches
/// the elastic energy change plus the body swell term within 1%.
#[test]
fn pumped_work_matches_stored_energy_on_the_rising_branch() {
    let geo = ChamberGeometry::gripping(45.0);
    let mat = dragon_skin();
    let c_body = geo.body_compliance_mm3_per_kpa(mat.c10_mpa);
    let mesh = MeridianMesh::chamber(&geo, 48).unwrap();
    let model =
        MembraneModel::with_closures(mesh, mat, Some(geo.bending_thickness_mm()), c_body)
            .unwrap();

    let n = model.mesh().n_dofs();
    let rest = vec![0.0; n];
    let v0 = model.total_volume(&rest, 0.0);

    // Stay well below the snap: the rising branch at this tilt folds past
    // 2 kPa, reached far beyond this volume window.
    let v_hi = v0 + 1200.0;
    let steps = 48;
    let mut u = rest.clone();
    let mut p = 0.0;
    let mut work = 0.0;
    let mut prev_p = 0.0;
    let mut prev_v = v0;
    for k in 1..=steps {
        let v_target = v0 + (v_hi - v0) * k as f64 / steps as f64;
        let (u_next, p_next) = equilibrium_at_volume(&model, v_target, &u, p, 1e-10).unwrap();
        work += 0.5 * (p_next + prev_p) * (v_target - prev_v);
        prev_p = p_next;
        prev_v = v_target;
        u = u_next;
        p = p_next;
    }

    let energy_mem_kpa_mm3 = 1000.0
        * (model.elastic_energy(&model.mesh().positions(&u)).unwrap()
            - model.elastic_energy(&model.mesh().positions(&rest)).unwrap());
    let energy_body = 0.5 * c_body * p * p;
    let stored = energy_mem_kpa_mm3 + energy_body;
    assert!(stored > 0.0 && work > 0.0);
    assert_relative_eq!(work, stored, max_relative = 0.01);
}

/// A shallow tilt traces a monotone-volume path while a deep one encloses
/// area and dips below zero pressure; the sweep recommends the smallest
/// bistable angle.
#[test]
fn sweep_separates_shallow_and_deep_tilts() {
    let template = ChamberGeometry::gripping(45.0);
    let control = ContinuationControl::default();
    let sweep = tilt_sweep(&template, &[30.0, 45.0], &dragon_skin(), 96, &control);

    let shallow = sweep.entries[0].outcome.as_ref().unwrap();
    let deep = sweep.entries[1].outcome.as_ref().unwrap();

    assert!(!shallow.has_enclosed_area);
    assert!(!shallow.has_negative_pressure);
    assert!(!shallow.bistable());
    assert_eq!(shallow.enclosed_area_kpa_mm3, 0.0);

    assert!(deep.has_enclosed_area);
    assert!(deep.has_negative_pressure);
    assert!(deep.bistable());
    assert!(deep.enclosed_area_kpa_mm3 > 0.0);
    assert!(deep.released_energy_kpa_mm3.unwrap() > 0.0);
    assert!(deep.min_pressure_kpa < 0.0);
    assert!(shallow.p_s_kpa.unwrap() < deep.p_s_kpa.unwrap());

    assert_eq!(sweep.recommended_tilt_deg, Some(45.0));
}

/// Tilt sweeps isolate per-angle failures instead of failing whole.
#[test]
fn sweep_keeps_failures_local() {
    let template = ChamberGeometry::gripping(45.0);
    let control = ContinuationControl::default();
    // A negative tilt is geometrically infeasible and must fail alone.
    let sweep = tilt_sweep(&template, &[-10.0, 30.0], &dragon_skin(), 24, &control);
    assert!(sweep.entries[0].outcome.is_err());
    assert!(sweep.entries[1].outcome.is_ok());
    assert_eq!(sweep.recommended_tilt_deg, None);
}
