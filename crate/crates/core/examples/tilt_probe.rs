//! Scratch probe: fold structure vs tilt and effective thickness.

use snapgrip_core::geometry::{ChamberGeometry, GrippingGeometry};
use snapgrip_core::materials::Catalog;
use snapgrip_core::membrane::continuation::{trace_equilibrium_path, ContinuationControl};
use snapgrip_core::membrane::MembraneModel;
use snapgrip_core::mesh::MeridianMesh;

fn main() {
    let params = Catalog::builtin().get("dragon-skin-00-30").unwrap().params;
    for h in [2.0] {
        println!("== membrane thickness {h} mm ==");
        for tilt in [20.0f64, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0] {
            let mut g = GrippingGeometry::standard(tilt);
            g.membrane_thickness_mm = h;
            let geo = ChamberGeometry::Gripping(g);
            let mesh = MeridianMesh::chamber(&geo, 96).unwrap();
            let model = MembraneModel::new(mesh, params).unwrap();
            let control = ContinuationControl {
                max_volume_ratio: 4.0,
                ..ContinuationControl::default()
            };
            let t0 = std::time::Instant::now();
            match trace_equilibrium_path(&model, &control) {
                Ok(path) => {
                    let s = path.samples();
                    let mut p_folds = 0;
                    let mut v_folds = 0;
                    let mut first_fold = None;
                    for i in 1..s.len() - 1 {
                        let dp0 = s[i].pressure_kpa - s[i - 1].pressure_kpa;
                        let dp1 = s[i + 1].pressure_kpa - s[i].pressure_kpa;
                        if dp0 > 0.0 && dp1 < 0.0 && s[i].pressure_kpa > 0.0 {
                            p_folds += 1;
                            first_fold.get_or_insert(i);
                        } else if dp0 * dp1 < 0.0 {
                            p_folds += 1;
                        }
                        let dv0 = s[i].volume_mm3 - s[i - 1].volume_mm3;
                        let dv1 = s[i + 1].volume_mm3 - s[i].volume_mm3;
                        if dv0 * dv1 < 0.0 {
                            v_folds += 1;
                        }
                    }
                    let valley = first_fold
                        .map(|k| {
                            s[k..].iter().map(|x| x.pressure_kpa).fold(f64::INFINITY, f64::min)
                        })
                        .unwrap_or(f64::NAN);
                    let p_s = first_fold.map(|k| s[k].pressure_kpa);
                    println!(
                        "  tilt {tilt:4.0}: n={:4} pfolds={} vfolds={} p_s={:?} valley={:9.4} term={:?} [{:.0?}]",
                        s.len(),
                        p_folds,
                        v_folds,
                        p_s.map(|v| (v * 1e4).round() / 1e4),
                        valley,
                        path.termination(),
                        t0.elapsed()
                    );
                }
                Err(e) => println!("  tilt {tilt:4.0}: ERROR {e}"),
            }
        }
    }
}
