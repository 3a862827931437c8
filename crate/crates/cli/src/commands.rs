//! The experiment implementations behind each subcommand. Every runner
//! takes a parsed config plus the command-line overrides, writes its
//! artifacts into the output directory, and returns the file names it
//! wrote, in writing order, for the manifest.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use snapgrip_core::beam::{self, ObjectStiffness};
use snapgrip_core::grasp::{self, ClampRig, GraspScenario, GraspTrace, Phase};
use snapgrip_core::io as core_io;
use snapgrip_core::network::{
    ChamberNode, ChamberRole, HydraulicNetwork, PvCharacteristic, SnapEvent,
};
use snapgrip_core::path::Termination;
use snapgrip_core::pv::{self, BistabilityReport, LimitKind};

use crate::config::{
    build_fixture, BeamCommandConfig, CalibrateConfig, GraspConfig, NetworkConfig, SweepConfig,
    TraceConfig,
};
use crate::{invalid, Overrides};

fn create(out_dir: &Path, name: &str) -> Result<File> {
    let path = out_dir.join(name);
    File::create(&path).with_context(|| format!("creating {}", path.display()))
}

fn write_json(out_dir: &Path, name: &str, doc: &serde_json::Value) -> Result<()> {
    let mut file = create(out_dir, name)?;
    serde_json::to_writer_pretty(&mut file, doc)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn termination_json(t: &Termination<f64>) -> serde_json::Value {
    match t {
        Termination::PressureRecovered { p_s_kpa } => {
            json!({"kind": "pressure-recovered", "p_s_kPa": p_s_kpa})
        }
        Termination::VolumeCap { volume_mm3 } => {
            json!({"kind": "volume-cap", "volume_mm3": volume_mm3})
        }
        Termination::MaxSteps => json!({"kind": "max-steps"}),
        Termination::Stalled { arc_mm } => json!({"kind": "stalled", "arc_mm": arc_mm}),
    }
}

fn report_json(report: &BistabilityReport<f64>) -> serde_json::Value {
    let limit_points: Vec<serde_json::Value> = report
        .limit_points
        .iter()
        .map(|lp| {
            json!({
                "kind": match lp.kind {
                    LimitKind::PressureLimit => "pressure",
                    LimitKind::VolumeLimit => "volume",
                },
                "volume_mm3": lp.volume_mm3,
                "pressure_kPa": lp.pressure_kpa,
            })
        })
        .collect();
    json!({
        "bistable": report.bistable(),
        "has_enclosed_area": report.has_enclosed_area,
        "enclosed_area_kPa_mm3": report.enclosed_area_kpa_mm3,
        "has_negative_pressure": report.has_negative_pressure,
        "min_pressure_kPa": report.min_pressure_kpa,
        "p_s_kPa": report.p_s_kpa,
        "released_energy_kPa_mm3": report.released_energy_kpa_mm3,
        "limit_points": limit_points,
    })
}

fn events_json(events: &[SnapEvent<f64>]) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = events
        .iter()
        .map(|e| {
            json!({
                "node_id": e.node_id,
                "step": e.step,
                "pressure_before_kPa": e.pressure_before_kpa,
                "pressure_after_kPa": e.pressure_after_kpa,
                "volume_before_mm3": e.volume_before_mm3,
                "volume_after_mm3": e.volume_after_mm3,
            })
        })
        .collect();
    serde_json::Value::Array(rows)
}

/// Trace one chamber: path CSV with fold markers, the reusable
/// characteristic CSV, and a classification summary.
pub fn run_trace(cfg: &TraceConfig, ov: &Overrides, out_dir: &Path) -> Result<Vec<String>> {
    ov.reject_angles("trace")?;
    ov.reject_flow("trace")?;
    let geo = cfg.chamber.geometry(None)?;
    let material = cfg.material.resolve(&ov.base_dir)?;
    let control = cfg.solver.control(ov.max_volume_mm3);

    let path = pv::chamber_path(&geo, &material, cfg.solver.n_elements(), &control)?;
    let report = pv::classify_bistability(&path)?;

    core_io::write_path_csv(create(out_dir, "path.csv")?, &path)?;
    let characteristic = PvCharacteristic::from_path(&path)?;
    core_io::write_characteristic_csv(create(out_dir, "characteristic.csv")?, &characteristic)?;

    let summary = json!({
        "rest_volume_mm3": path.samples()[0].volume_mm3,
        "n_samples": path.samples().len(),
        "termination": termination_json(&path.termination()),
        "classification": report_json(&report),
    });
    write_json(out_dir, "summary.json", &summary)?;
    Ok(vec!["path.csv".into(), "characteristic.csv".into(), "summary.json".into()])
}

/// Sweep the template over tilt angles and classify each. All angles are
/// attempted; a failed angle is reported in both artifacts and turns the
/// whole run into a non-converged one.
pub fn run_sweep(cfg: &SweepConfig, ov: &Overrides, out_dir: &Path) -> Result<Vec<String>> {
    ov.reject_flow("sweep")?;
    let angles = ov.angles.clone().unwrap_or_else(|| cfg.angles_deg.clone());
    if angles.is_empty() {
        return Err(invalid(anyhow!("sweep: the angle list is empty")));
    }
    let template = cfg.chamber.geometry(Some(angles[0]))?;
    let material = cfg.material.resolve(&ov.base_dir)?;
    let control = cfg.solver.control(ov.max_volume_mm3);

    let sweep = pv::tilt_sweep(&template, &angles, &material, cfg.solver.n_elements(), &control);

    core_io::write_sweep_csv(create(out_dir, "sweep.csv")?, &sweep)?;
    let mut file = create(out_dir, "sweep.json")?;
    file.write_all(core_io::sweep_to_json(&sweep).as_bytes())?;
    file.write_all(b"\n")?;

    let failures: Vec<String> = sweep
        .entries
        .iter()
        .filter_map(|e| e.outcome.as_ref().err().map(|err| format!("{} deg: {err}", e.tilt_deg)))
        .collect();
    if !failures.is_empty() {
        bail!(
            "{} of {} angles did not converge: {}",
            failures.len(),
            angles.len(),
            failures.join("; ")
        );
    }
    Ok(vec!["sweep.csv".into(), "sweep.json".into()])
}

/// Tabulate the fixture beam's tip deflection against tip load and report
/// its scalar stiffness.
pub fn run_beam(cfg: &BeamCommandConfig, ov: &Overrides, out_dir: &Path) -> Result<Vec<String>> {
    ov.reject_angles("beam")?;
    ov.reject_flow("beam")?;
    ov.reject_volume_cap("beam")?;
    let fixture = build_fixture(&cfg.beam)?;
    if cfg.load.steps == 0 || !(cfg.load.max_n > 0.0) {
        return Err(invalid(anyhow!("load: steps and max_n must be positive")));
    }

    let mut file = create(out_dir, "deflection.csv")?;
    let mut w = csv::Writer::from_writer(&mut file);
    w.write_record(["P_N", "delta_mm"])?;
    for k in 0..=cfg.load.steps {
        let p = cfg.load.max_n * k as f64 / cfg.load.steps as f64;
        let delta = beam::tip_deflection(&fixture, p)?;
        w.write_record([p.to_string(), delta.to_string()])?;
    }
    w.flush()?;
    drop(w);

    let summary = json!({
        "stiffness_n_per_mm": beam::stiffness(&fixture)?,
        "compliance_mm_per_n": beam::compliance(&fixture)?,
        "tip_abscissa_mm": fixture.tip_abscissa(),
        "n_segments": fixture.segments.len(),
        "e_mpa": fixture.e_mpa,
    });
    write_json(out_dir, "summary.json", &summary)?;
    Ok(vec!["deflection.csv".into(), "summary.json".into()])
}

fn node_state_json(net: &HydraulicNetwork<f64>) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = net
        .nodes()
        .iter()
        .map(|n| {
            json!({
                "id": n.id(),
                "role": match n.role() {
                    ChamberRole::Contact => "contact",
                    ChamberRole::Gripping => "gripping",
                },
                "volume_mm3": n.volume_mm3(),
                "branch": n.branch(),
                "prescribed": n.is_prescribed(),
            })
        })
        .collect();
    serde_json::Value::Array(rows)
}

/// Build the circuit described by a config: one contact chamber and
/// `gripping_count` identical gripping chambers sharing the liquid that
/// fills them at assembly. Failures here are treated as scenario
/// validation: the description asked for a circuit that cannot exist.
fn assemble_circuit(
    contact: PvCharacteristic<f64>,
    gripping: PvCharacteristic<f64>,
    gripping_count: usize,
    contact_pre_snapped: bool,
    compliance: f64,
) -> Result<HydraulicNetwork<f64>> {
    if gripping_count == 0 {
        return Err(invalid(anyhow!("gripping_count must be at least 1")));
    }
    let contact_node = if contact_pre_snapped {
        ChamberNode::pre_snapped("contact", ChamberRole::Contact, contact)
    } else {
        ChamberNode::at_rest("contact", ChamberRole::Contact, contact)
    }
    .map_err(|e| invalid(anyhow!("contact node: {e}")))?;
    let mut nodes = vec![contact_node];
    for k in 1..=gripping_count {
        nodes.push(
            ChamberNode::at_rest(&format!("grip{k}"), ChamberRole::Gripping, gripping.clone())
                .map_err(|e| invalid(anyhow!("gripping node: {e}")))?,
        );
    }
    let total: f64 = nodes.iter().map(|n| n.volume_mm3()).sum();
    HydraulicNetwork::assemble(nodes, total, compliance)
        .map_err(|e| invalid(anyhow!("assembly: {e}")))
}

/// Assemble the closed circuit and drive the configured injection,
/// exporting the trace and the snap events.
pub fn run_network(cfg: &NetworkConfig, ov: &Overrides, out_dir: &Path) -> Result<Vec<String>> {
    ov.reject_angles("network")?;
    let contact = cfg.contact.resolve(&ov.base_dir, &cfg.solver, ov.max_volume_mm3)?;
    let gripping = cfg.gripping.resolve(&ov.base_dir, &cfg.solver, ov.max_volume_mm3)?;
    let net = assemble_circuit(
        contact,
        gripping,
        cfg.gripping_count,
        cfg.contact_pre_snapped,
        cfg.parasitic_compliance_mm3_per_kpa,
    )?;

    let flow = ov.flow_mm3s.unwrap_or(cfg.injection.flow_mm3s);
    let (end, trace, events) = net.inject(flow, cfg.injection.duration_s, cfg.injection.steps)?;

    core_io::write_network_trace_csv(create(out_dir, "trace.csv")?, &trace)?;
    let truncated = trace.rows.len() < cfg.injection.steps + 1;
    let summary = json!({
        "assembly_pressure_kPa": net.pressure_kpa(),
        "final_pressure_kPa": end.pressure_kpa(),
        "total_liquid_mm3": end.total_liquid_mm3(),
        "flow_mm3s": flow,
        "duration_s": cfg.injection.duration_s,
        "steps_requested": cfg.injection.steps,
        "rows_traced": trace.rows.len(),
        "truncated": truncated,
        "events": events_json(&events),
        "nodes": node_state_json(&end),
    });
    write_json(out_dir, "summary.json", &summary)?;
    Ok(vec!["trace.csv".into(), "summary.json".into()])
}

/// Displaced volume at the first snap, if one fired.
fn trigger_volume(trace: &GraspTrace<f64>, events: &[SnapEvent<f64>]) -> Option<f64> {
    if events.is_empty() {
        return None;
    }
    trace.points.iter().find(|p| p.phase == Phase::PostSnap).map(|p| p.volume_mm3)
}

/// Run the full pick-up attempt: size filter, press through the contact
/// chamber, snap cascade, hold check.
pub fn run_grasp(cfg: &GraspConfig, ov: &Overrides, out_dir: &Path) -> Result<Vec<String>> {
    ov.reject_angles("grasp")?;
    ov.reject_flow("grasp")?;
    let contact = cfg.contact.resolve(&ov.base_dir, &cfg.solver, ov.max_volume_mm3)?;
    let gripping = cfg.gripping.resolve(&ov.base_dir, &cfg.solver, ov.max_volume_mm3)?;
    let net = assemble_circuit(contact, gripping, cfg.gripping_count, true, 0.0)?;
    let fixture = build_fixture(&cfg.fixture)?;

    let mut scenario = GraspScenario::new(net, fixture, cfg.fixture_gap_mm);
    if let Some(g) = cfg.contact_gap_mm {
        scenario.contact_gap_mm = g;
    }
    if let Some(s) = cfg.snap_displacement_mm {
        scenario.snap_displacement_mm = s;
    }
    if let Some(a) = cfg.contact_area_mm2 {
        scenario.contact_area_mm2 = a;
    }
    scenario.hold_pressure_kpa = cfg.hold_pressure_kpa;
    scenario.press_volume_mm3 = cfg.press_volume_mm3;
    if let Some(obj) = &cfg.object {
        scenario = scenario.with_object(obj.build()?);
    }

    let result = grasp::simulate_grasp(&scenario, cfg.press_steps)?;

    core_io::write_grasp_trace_csv(create(out_dir, "grasp.csv")?, &result.trace)?;
    let (lo, hi) = grasp::size_window(scenario.fixture_gap_mm, scenario.snap_displacement_mm);
    let summary = json!({
        "outcome": result.outcome().to_string(),
        "plateau_pressure_kPa": result.network.pressure_kpa(),
        "trigger_volume_mm3": trigger_volume(&result.trace, &result.events),
        "size_window_mm": [lo, hi],
        "object_size_mm": cfg.object.as_ref().map(|o| o.size_mm),
        "events": events_json(&result.events),
        "nodes": node_state_json(&result.network),
    });
    write_json(out_dir, "summary.json", &summary)?;
    Ok(vec!["grasp.csv".into(), "summary.json".into()])
}

/// Fit the fixture stiffness and effective area to measured plateau
/// anchors and tabulate the calibrated plateau against object stiffness.
pub fn run_calibrate(cfg: &CalibrateConfig, ov: &Overrides, out_dir: &Path) -> Result<Vec<String>> {
    ov.reject_angles("calibrate")?;
    ov.reject_flow("calibrate")?;
    let characteristic = cfg.source.resolve(&ov.base_dir, &cfg.solver, ov.max_volume_mm3)?;
    let anchors: Vec<snapgrip_core::calibrate::CalibrationAnchor<f64>> = cfg
        .anchors
        .iter()
        .map(|a| snapgrip_core::calibrate::CalibrationAnchor {
            object_stiffness_n_per_mm: a.object_stiffness_n_per_mm,
            injected_mm3: a.injected_mm3,
            pressure_kpa: a.pressure_kpa,
        })
        .collect();

    let fit = snapgrip_core::calibrate::calibrate_fixture(
        &characteristic,
        &anchors,
        cfg.contact_gap_mm,
        cfg.snap_displacement_mm,
    )?;

    let summary = json!({
        "beam_stiffness_n_per_mm": fit.beam_stiffness_n_per_mm,
        "effective_area_mm2": fit.effective_area_mm2,
        "residual_rms_kPa": fit.residual_rms_kpa,
        "anchors": cfg.anchors.iter().zip(&fit.predicted_kpa).map(|(a, p)| json!({
            "object_stiffness_n_per_mm": a.object_stiffness_n_per_mm,
            "injected_mm3": a.injected_mm3,
            "measured_kPa": a.pressure_kpa,
            "predicted_kPa": p,
        })).collect::<Vec<_>>(),
    });
    write_json(out_dir, "calibration.json", &summary)?;
    let mut outputs = vec!["calibration.json".to_string()];

    if let Some(grid) = &cfg.plateau {
        if grid.points < 2 || !(grid.stiffness_max_n_per_mm > grid.stiffness_min_n_per_mm) {
            return Err(invalid(anyhow!(
                "plateau: needs at least 2 points and an increasing stiffness range"
            )));
        }
        let mut file = create(out_dir, "plateau.csv")?;
        let mut w = csv::Writer::from_writer(&mut file);
        w.write_record(["k_o_n_per_mm", "plateau_kPa"])?;
        for k in 0..grid.points {
            let frac = k as f64 / (grid.points - 1) as f64;
            let k_o = grid.stiffness_min_n_per_mm
                + frac * (grid.stiffness_max_n_per_mm - grid.stiffness_min_n_per_mm);
            let mut rig: ClampRig<f64> = fit.rig(ObjectStiffness::Finite(k_o));
            rig.contact_gap_mm = cfg.contact_gap_mm;
            rig.snap_displacement_mm = cfg.snap_displacement_mm;
            let trace = grasp::simulate_quasistatic_test(&characteristic, &fit.fixture, &rig)?;
            let plateau = grasp::plateau_pressure(&trace, grid.injected_mm3)?;
            w.write_record([k_o.to_string(), plateau.to_string()])?;
        }
        w.flush()?;
        drop(w);
        outputs.push("plateau.csv".into());
    }
    Ok(outputs)
}
