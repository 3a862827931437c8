//! CSV and JSON serialization of curves, sweeps, and traces.
//!
//! All writers format numbers with Rust's shortest round-trip float
//! display, so equal inputs always produce byte-identical output and a
//! read-back recovers the exact values. Characteristic files use the
//! column triple `V_mm3, p_kPa, stability` both ways: the chamber tracer
//! exports it and the network ingests it, so a measured curve can replace
//! a simulated one without touching anything downstream.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grasp::GraspTrace;
use crate::network::{CharSample, NetworkTrace, PvCharacteristic};
use crate::path::EquilibriumPath;
use crate::pv::TiltSweep;
use crate::scalar::{of, Real};

/// Write pressure-volume rows as `V_mm3, p_kPa, stability` CSV.
pub fn write_pv_csv<T: Real, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (T, T, bool)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["V_mm3", "p_kPa", "stability"])?;
    for (v, p, stable) in rows {
        w.write_record([v.to_string(), p.to_string(), u8::from(stable).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Export a traced equilibrium path with per-sample fold markers. The
/// volume, pressure, and stability columns keep the characteristic names,
/// so an exported path can be fed straight back into the characteristic
/// reader; the extra columns are ignored on ingest.
pub fn write_path_csv<T: Real, W: Write>(out: W, path: &EquilibriumPath<T>) -> Result<()> {
    let mut folds = vec![false; path.samples().len()];
    // Paths too short for fold analysis simply have no limit points.
    if let Ok(points) = crate::pv::find_limit_points(path) {
        for lp in points {
            folds[lp.index] = true;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_index", "V_mm3", "p_kPa", "stability", "is_limit_point"])?;
    for (i, s) in path.samples().iter().enumerate() {
        w.write_record([
            i.to_string(),
            s.volume_mm3.to_string(),
            s.pressure_kpa.to_string(),
            u8::from(s.stable).to_string(),
            u8::from(folds[i]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Export a characteristic in the same column format it is read from.
pub fn write_characteristic_csv<T: Real, W: Write>(
    out: W,
    characteristic: &PvCharacteristic<T>,
) -> Result<()> {
    write_pv_csv(
        out,
        characteristic
            .samples()
            .iter()
            .map(|s| (s.volume_mm3, s.pressure_kpa, s.stable)),
    )
}

/// Read a characteristic from `V_mm3, p_kPa, stability` CSV. The stability
/// column accepts 1/0 or true/false.
pub fn read_characteristic_csv<T: Real, R: Read>(input: R) -> Result<PvCharacteristic<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Ingest(format!("missing column '{name}'")))
    };
    let (vi, pi, si) = (col("V_mm3")?, col("p_kPa")?, col("stability")?);

    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Ingest(format!("row {row}: too few fields")))
        };
        let number = |i: usize| -> Result<T> {
            let s = field(i)?;
            s.parse::<f64>()
                .map(of::<T>)
                .map_err(|_| Error::Ingest(format!("row {row}: '{s}' is not a number")))
        };
        let stable = match field(si)? {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(Error::Ingest(format!(
                    "row {row}: stability must be 1/0 or true/false, got '{other}'"
                )))
            }
        };
        samples.push(CharSample {
            volume_mm3: number(vi)?,
            pressure_kpa: number(pi)?,
            stable,
        });
    }
    PvCharacteristic::from_samples(samples)
}

/// Write a tilt sweep as CSV, one row per successfully analyzed angle.
/// Optional quantities print as empty fields; failed angles are omitted
/// here and reported in the JSON summary instead.
pub fn write_sweep_csv<T: Real, W: Write>(out: W, sweep: &TiltSweep<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "angle_deg",
        "p_s_kPa",
        "min_pressure_kPa",
        "enclosed_area_kPa_mm3",
        "released_energy_kPa_mm3",
        "has_enclosed_area",
        "has_negative_pressure",
        "bistable",
    ])?;
    let opt = |x: &Option<T>| x.map_or(String::new(), |v| v.to_string());
    for entry in &sweep.entries {
        let Ok(report) = &entry.outcome else { continue };
        w.write_record([
            entry.tilt_deg.to_string(),
            opt(&report.p_s_kpa),
            report.min_pressure_kpa.to_string(),
            report.enclosed_area_kpa_mm3.to_string(),
            opt(&report.released_energy_kpa_mm3),
            u8::from(report.has_enclosed_area).to_string(),
            u8::from(report.has_negative_pressure).to_string(),
            u8::from(report.bistable()).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Tilt sweep as a JSON document, failures included. Keys are emitted in
/// sorted order, so equal sweeps serialize identically.
pub fn sweep_to_json(sweep: &TiltSweep<f64>) -> String {
    let entries: Vec<serde_json::Value> = sweep
        .entries
        .iter()
        .map(|entry| match &entry.outcome {
            Ok(r) => serde_json::json!({
                "tilt_deg": entry.tilt_deg,
                "ok": true,
                "p_s_kPa": r.p_s_kpa,
                "min_pressure_kPa": r.min_pressure_kpa,
                "enclosed_area_kPa_mm3": r.enclosed_area_kpa_mm3,
                "released_energy_kPa_mm3": r.released_energy_kpa_mm3,
                "has_enclosed_area": r.has_enclosed_area,
                "has_negative_pressure": r.has_negative_pressure,
                "bistable": r.bistable(),
            }),
            Err(e) => serde_json::json!({
                "tilt_deg": entry.tilt_deg,
                "ok": false,
                "error": e.to_string(),
            }),
        })
        .collect();
    let doc = serde_json::json!({
        "entries": entries,
        "recommended_tilt_deg": sweep.recommended_tilt_deg,
    });
    serde_json::to_string_pretty(&doc).expect("sweep serialization cannot fail")
}

/// Write an injection trace as CSV: time, liquid budget, shared pressure,
/// one volume column per node in network order, and the count of snap
/// events fired during the step.
pub fn write_network_trace_csv<T: Real, W: Write>(out: W, trace: &NetworkTrace<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t_s".to_string(), "V_total_mm3".into(), "p_kPa".into()];
    header.extend(trace.node_ids.iter().map(|id| format!("V_{id}")));
    header.push("event_flag".into());
    w.write_record(&header)?;
    for row in &trace.rows {
        let mut record = vec![
            row.t_s.to_string(),
            row.total_liquid_mm3.to_string(),
            row.pressure_kpa.to_string(),
        ];
        record.extend(row.node_volumes_mm3.iter().map(|v| v.to_string()));
        record.push(row.n_events.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a grasp or bench-test trace as CSV with the phase column in
/// roman numerals. The run's outcome is not a row quantity; it belongs
/// to the JSON summary.
pub fn write_grasp_trace_csv<T: Real, W: Write>(out: W, trace: &GraspTrace<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["volume_mm3", "pressure_kpa", "displacement_mm", "force_n", "phase"])?;
    for p in &trace.points {
        w.write_record([
            p.volume_mm3.to_string(),
            p.pressure_kpa.to_string(),
            p.displacement_mm.to_string(),
            p.force_n.to_string(),
            p.phase.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grasp::{GraspOutcome, GraspPoint, Phase};
    use crate::network::{ChamberNode, ChamberRole, HydraulicNetwork};
    use crate::pv::{BistabilityReport, TiltSweepEntry};

    fn sample(v: f64, p: f64, stable: bool) -> CharSample<f64> {
        CharSample { volume_mm3: v, pressure_kpa: p, stable }
    }

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

    #[test]
    fn characteristic_roundtrips_exactly() {
        let ch = snap_char();
        let mut buf = Vec::new();
        write_characteristic_csv(&mut buf, &ch).unwrap();
        let back: PvCharacteristic<f64> = read_characteristic_csv(buf.as_slice()).unwrap();
        assert_eq!(ch, back);
    }

    #[test]
    fn exported_path_feeds_the_characteristic_reader() {
        use crate::path::{EquilibriumPath, PathSample, Termination};
        let rows = [(1000.0, 0.0, true), (2000.0, 6.0, true), (1900.0, -1.0, false), (1920.0, 6.0, true), (3000.0, 14.0, true)];
        let samples = rows
            .iter()
            .map(|&(v, p, stable)| PathSample {
                volume_mm3: v,
                pressure_kpa: p,
                apex_z_mm: 0.0,
                stable,
                negative_pivots: usize::from(!stable),
            })
            .collect();
        let path = EquilibriumPath::from_samples(samples, Termination::MaxSteps).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "sample_index,V_mm3,p_kPa,stability,is_limit_point");
        // The upper fold (pressure maximum) and lower fold (pressure
        // minimum) get flagged; the endpoints and the re-rising sample
        // do not.
        let fold_flags: Vec<&str> =
            text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
        assert_eq!(fold_flags, ["0", "1", "1", "0", "0"]);

        let back: PvCharacteristic<f64> = read_characteristic_csv(buf.as_slice()).unwrap();
        assert_eq!(back, snap_char());
    }

    #[test]
    fn ingest_reports_missing_columns_and_bad_fields() {
        let no_col = "V_mm3,pressure\n1,2\n";
        assert!(matches!(
            read_characteristic_csv::<f64, _>(no_col.as_bytes()),
            Err(Error::Ingest(_))
        ));
        let bad_num = "V_mm3,p_kPa,stability\nten,2,1\n";
        assert!(matches!(
            read_characteristic_csv::<f64, _>(bad_num.as_bytes()),
            Err(Error::Ingest(_))
        ));
        let bad_flag = "V_mm3,p_kPa,stability\n10,2,maybe\n";
        assert!(matches!(
            read_characteristic_csv::<f64, _>(bad_flag.as_bytes()),
            Err(Error::Ingest(_))
        ));
    }

    #[test]
    fn ingest_accepts_spelled_out_booleans() {
        let text = "V_mm3,p_kPa,stability\n10,0,true\n20,1,false\n30,2,true\n";
        let ch: PvCharacteristic<f64> = read_characteristic_csv(text.as_bytes()).unwrap();
        let flags: Vec<bool> = ch.samples().iter().map(|s| s.stable).collect();
        assert_eq!(flags, [true, false, true]);
    }

    #[test]
    fn network_trace_columns_follow_node_order() {
        let contact = snap_char().scaled(1.0, 5.0).unwrap();
        let net = HydraulicNetwork::standard_gripper(contact, snap_char()).unwrap();
        let (_, trace, _) = net.inject(10.0, 2.0, 4).unwrap();
        let mut buf = Vec::new();
        write_network_trace_csv(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "t_s,V_total_mm3,p_kPa,V_contact,V_grip1,V_grip2,event_flag");
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn identical_inputs_serialize_byte_identically() {
        let node = ChamberNode::at_rest("solo", ChamberRole::Gripping, snap_char()).unwrap();
        let net = HydraulicNetwork::assemble(vec![node], 1500.0, 0.0).unwrap();
        let mut bufs = Vec::new();
        for _ in 0..2 {
            let (_, trace, _) = net.inject(7.0, 3.0, 8).unwrap();
            let mut buf = Vec::new();
            write_network_trace_csv(&mut buf, &trace).unwrap();
            bufs.push(buf);
        }
        assert_eq!(bufs[0], bufs[1]);
    }

    #[test]
    fn grasp_trace_prints_phase_numerals() {
        let trace = GraspTrace {
            rest_volume_mm3: 0.0,
            points: vec![
                GraspPoint {
                    volume_mm3: 0.0,
                    pressure_kpa: 0.0,
                    displacement_mm: 0.0,
                    force_n: 0.0,
                    phase: Phase::PreContact,
                },
                GraspPoint {
                    volume_mm3: 10.0,
                    pressure_kpa: 1.5,
                    displacement_mm: 2.5,
                    force_n: 0.25,
                    phase: Phase::Contact,
                },
                GraspPoint {
                    volume_mm3: 10.0,
                    pressure_kpa: 0.5,
                    displacement_mm: 2.5,
                    force_n: 0.25,
                    phase: Phase::PostSnap,
                },
            ],
            outcome: GraspOutcome::NoTrigger,
            truncated: false,
        };
        let mut buf = Vec::new();
        write_grasp_trace_csv(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let phases: Vec<&str> =
            text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
        assert_eq!(phases, ["I", "II", "III"]);
    }

    #[test]
    fn sweep_csv_and_json_agree_on_content() {
        let report = BistabilityReport {
            has_enclosed_area: true,
            enclosed_area_kpa_mm3: 489.33,
            has_negative_pressure: false,
            min_pressure_kpa: 0.0,
            p_s_kpa: Some(1.87),
            released_energy_kpa_mm3: Some(489.33),
            limit_points: Vec::new(),
        };
        let sweep = TiltSweep {
            entries: vec![
                TiltSweepEntry { tilt_deg: 40.0, outcome: Ok(report) },
                TiltSweepEntry {
                    tilt_deg: -10.0,
                    outcome: Err(Error::Geometry("tilt must be positive".into())),
                },
            ],
            recommended_tilt_deg: None,
        };
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &sweep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // Failed angle omitted from the CSV body.
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("40,1.87,0,489.33,489.33,1,0,"));

        let json = sweep_to_json(&sweep);
        assert!(json.contains("\"ok\": false"));
        assert!(json.contains("tilt must be positive"));
        assert_eq!(json, sweep_to_json(&sweep));
    }
}
