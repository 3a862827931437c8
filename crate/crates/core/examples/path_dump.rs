//! Scratch probe: dump one dense equilibrium trace as CSV. Removed before release.

use snapgrip_core::geometry::ChamberGeometry;
use snapgrip_core::materials::MaterialParams;
use snapgrip_core::membrane::continuation::{trace_equilibrium_path, ContinuationControl};
use snapgrip_core::membrane::MembraneModel;
use snapgrip_core::mesh::MeridianMesh;

fn main() {
    let mut args = std::env::args().skip(1);
    let tilt: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(45.0);
    let n_el: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(96);

    let role = args.next().unwrap_or_else(|| "grip".into());
    let geo = if role == "contact" {
        ChamberGeometry::contact(tilt)
    } else {
        ChamberGeometry::gripping(tilt)
    };
    let mat = MaterialParams::incompressible(0.1, 1080.0).unwrap();
    let c_body = geo.body_compliance_mm3_per_kpa(mat.c10_mpa);
    let mesh = MeridianMesh::chamber(&geo, n_el).unwrap();
    let model =
        MembraneModel::with_closures(mesh, mat, Some(geo.bending_thickness_mm()), c_body).unwrap();

    let control = ContinuationControl {
        initial_arc_mm: 0.02,
        max_arc_mm: 0.05,
        pressure_overshoot: 2.5,
        ..ContinuationControl::default()
    };
    let path = trace_equilibrium_path(&model, &control).unwrap();

    let mut out = String::from("index,volume_mm3,pressure_kpa,stable\n");
    for (i, s) in path.samples().iter().enumerate() {
        out.push_str(&format!(
            "{},{:.6},{:.8},{}\n",
            i, s.volume_mm3, s.pressure_kpa, s.stable as u8
        ));
    }
    std::fs::write("/tmp/dense_path.csv", out).unwrap();
    eprintln!(
        "tilt {tilt} n {n_el} c_body {c_body:.1} samples {} termination {:?}",
        path.samples().len(),
        path.termination()
    );
}
