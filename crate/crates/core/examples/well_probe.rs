//! Scratch probe: energy breakdown along the falling branch and at the
//! pressure valley, per tilt angle.

use snapgrip_core::geometry::{ChamberGeometry, GrippingGeometry};
use snapgrip_core::materials::Catalog;
use snapgrip_core::membrane::continuation::{
    trace_equilibrium_path_with_states, ContinuationControl,
};
use snapgrip_core::membrane::MembraneModel;
use snapgrip_core::mesh::MeridianMesh;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let tilt: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(45.0);
    let params = Catalog::builtin().get("dragon-skin-00-30").unwrap().params;
    let g = GrippingGeometry::standard(tilt);
    let geo = ChamberGeometry::Gripping(g);
    let mesh = MeridianMesh::chamber(&geo, 96).unwrap();
    let model = MembraneModel::new(mesh, params).unwrap();
    let control = ContinuationControl {
        initial_arc_mm: 0.02,
        max_arc_mm: 0.05,
        pressure_overshoot: 2.5,
        ..ContinuationControl::default()
    };
    let (path, states) = trace_equilibrium_path_with_states(&model, &control).unwrap();
    let s = path.samples();
    println!("# tilt {tilt} n={} term={:?}", s.len(), path.termination());

    // Pressure fold indices.
    let mut folds = Vec::new();
    for i in 1..s.len() - 1 {
        let dp0 = s[i].pressure_kpa - s[i - 1].pressure_kpa;
        let dp1 = s[i + 1].pressure_kpa - s[i].pressure_kpa;
        if dp0 * dp1 < 0.0 {
            folds.push(i);
        }
    }
    println!("# folds at {folds:?}");

    let report = |label: &str, i: usize| {
        let pos = model.mesh().positions(&states[i]);
        let parts = model.energy_parts(&pos).unwrap();
        println!(
            "{label} i={i} V={:9.1} p={:8.4} mem={:9.3} crease={:9.3} smooth={:9.3} end={:9.3}",
            s[i].volume_mm3,
            s[i].pressure_kpa,
            parts[0],
            parts[1],
            parts[2],
            parts[3],
        );
    };
    report("rest  ", 0);
    if let (Some(&a), Some(&b)) = (folds.first(), folds.get(1)) {
        report("p_s   ", a);
        let mid = (a + b) / 2;
        report("mid   ", mid);
        // valley = min pressure after first fold
        let v = (a..s.len())
            .min_by(|&x, &y| s[x].pressure_kpa.partial_cmp(&s[y].pressure_kpa).unwrap())
            .unwrap();
        report("valley", v);
        report("last  ", s.len() - 1);
    }
}
