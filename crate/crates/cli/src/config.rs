//! Experiment configuration schemas: strict TOML, one document per
//! subcommand.
//!
//! Parsing is strict everywhere: an unknown or misspelled key anywhere in
//! a document fails before any computation starts. File paths inside a
//! config resolve relative to the config file itself, so a config
//! directory can be moved or checked in as a unit.
//!
//! Every validation failure raised here carries the [`crate::Invalid`]
//! marker and exits with the validation status; errors from the numeric
//! core pass through unmarked.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use snapgrip_core::beam::{BeamSegment, FixtureBeam, ObjectStiffness};
use snapgrip_core::geometry::ChamberGeometry;
use snapgrip_core::grasp::ObjectModel;
use snapgrip_core::materials::{Catalog, CatalogEntry, MaterialParams};
use snapgrip_core::membrane::continuation::ContinuationControl;
use snapgrip_core::network::PvCharacteristic;
use snapgrip_core::pv;

use crate::invalid;

/// Chamber template selection plus optional overrides of the cast
/// dimensions. Field names follow the part drawings; overrides that do
/// not exist on the selected template are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChamberConfig {
    /// `gripping` or `contact`.
    pub kind: ChamberKind,
    /// Membrane tilt in degrees. Required for a single trace; a sweep
    /// ignores it and substitutes each swept angle.
    pub tilt_deg: Option<f64>,
    pub membrane_thickness_mm: Option<f64>,
    pub wall_mm: Option<f64>,
    // Gripping template dimensions.
    pub outer_radius_mm: Option<f64>,
    pub cap_radius_mm: Option<f64>,
    pub rim_depth_mm: Option<f64>,
    pub base_depth_mm: Option<f64>,
    // Contact template dimensions.
    pub span_diameter_mm: Option<f64>,
    pub cap_diameter_mm: Option<f64>,
    pub cavity_depth_mm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChamberKind {
    Gripping,
    Contact,
}

impl ChamberConfig {
    /// Build the geometry at the given tilt, falling back to the config's
    /// own `tilt_deg`.
    pub fn geometry(&self, tilt_deg: Option<f64>) -> Result<ChamberGeometry<f64>> {
        self.geometry_raw(tilt_deg).map_err(invalid)
    }

    fn geometry_raw(&self, tilt_deg: Option<f64>) -> Result<ChamberGeometry<f64>> {
        let tilt = tilt_deg
            .or(self.tilt_deg)
            .ok_or_else(|| anyhow!("chamber: tilt_deg is required"))?;
        let geo = match self.kind {
            ChamberKind::Gripping => {
                self.reject_foreign(
                    "gripping",
                    &[
                        (self.span_diameter_mm, "span_diameter_mm"),
                        (self.cap_diameter_mm, "cap_diameter_mm"),
                        (self.cavity_depth_mm, "cavity_depth_mm"),
                    ],
                )?;
                let ChamberGeometry::Gripping(mut g) = ChamberGeometry::gripping(tilt) else {
                    unreachable!()
                };
                set(&mut g.outer_radius_mm, self.outer_radius_mm);
                set(&mut g.cap_radius_mm, self.cap_radius_mm);
                set(&mut g.wall_mm, self.wall_mm);
                set(&mut g.rim_depth_mm, self.rim_depth_mm);
                set(&mut g.base_depth_mm, self.base_depth_mm);
                set(&mut g.membrane_thickness_mm, self.membrane_thickness_mm);
                ChamberGeometry::Gripping(g)
            }
            ChamberKind::Contact => {
                self.reject_foreign(
                    "contact",
                    &[
                        (self.outer_radius_mm, "outer_radius_mm"),
                        (self.cap_radius_mm, "cap_radius_mm"),
                        (self.rim_depth_mm, "rim_depth_mm"),
                        (self.base_depth_mm, "base_depth_mm"),
                    ],
                )?;
                let ChamberGeometry::Contact(mut c) = ChamberGeometry::contact(tilt) else {
                    unreachable!()
                };
                set(&mut c.span_diameter_mm, self.span_diameter_mm);
                set(&mut c.cap_diameter_mm, self.cap_diameter_mm);
                set(&mut c.wall_mm, self.wall_mm);
                set(&mut c.cavity_depth_mm, self.cavity_depth_mm);
                ChamberGeometry::Contact(c)
            }
        };
        geo.validate().map_err(|e| anyhow!("chamber: {e}"))?;
        Ok(geo)
    }

    fn reject_foreign(&self, kind: &str, fields: &[(Option<f64>, &str)]) -> Result<()> {
        for (value, name) in fields {
            if value.is_some() {
                bail!("chamber: {name} does not exist on the {kind} template");
            }
        }
        Ok(())
    }
}

fn set(slot: &mut f64, value: Option<f64>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Material selection: a catalog name, optionally resolved against a
/// user-supplied catalog file, or inline Neo-Hookean constants.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    /// Catalog entry name, e.g. `dragon-skin-00-30`.
    pub name: Option<String>,
    /// Extra catalog file whose entries extend and override the built-in
    /// catalog for the `name` lookup.
    pub catalog: Option<PathBuf>,
    pub c10_mpa: Option<f64>,
    /// Inverse bulk coefficient; omit or zero for incompressible.
    pub d1_per_mpa: Option<f64>,
    pub density_kg_m3: Option<f64>,
}

/// One catalog file entry: a `[name]` table with the material constants.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFileEntry {
    c10_mpa: f64,
    #[serde(default)]
    d1_per_mpa: f64,
    density_kg_m3: f64,
    #[serde(default)]
    uncalibrated: bool,
}

/// Load a key/value catalog file and lay its entries over the built-in
/// defaults.
pub fn load_catalog(path: &Path) -> Result<Catalog<f64>> {
    load_catalog_raw(path).map_err(invalid)
}

fn load_catalog_raw(path: &Path) -> Result<Catalog<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading material catalog {}", path.display()))?;
    let entries: std::collections::BTreeMap<String, CatalogFileEntry> = toml::from_str(&text)
        .with_context(|| format!("parsing material catalog {}", path.display()))?;
    let mut catalog = Catalog::builtin();
    for (name, e) in entries {
        let params = MaterialParams::new(e.c10_mpa, e.d1_per_mpa, e.density_kg_m3)
            .map_err(|err| anyhow!("catalog entry '{name}': {err}"))?;
        catalog.insert(&name, CatalogEntry { params, uncalibrated: e.uncalibrated });
    }
    Ok(catalog)
}

impl MaterialConfig {
    pub fn resolve(&self, base_dir: &Path) -> Result<MaterialParams<f64>> {
        self.resolve_raw(base_dir).map_err(invalid)
    }

    fn resolve_raw(&self, base_dir: &Path) -> Result<MaterialParams<f64>> {
        match (&self.name, self.c10_mpa) {
            (Some(_), Some(_)) => {
                bail!("material: give either a catalog name or inline constants, not both")
            }
            (None, None) => bail!("material: a catalog name or c10_mpa is required"),
            (Some(name), None) => {
                let catalog = match &self.catalog {
                    Some(path) => load_catalog(&base_dir.join(path))?,
                    None => Catalog::builtin(),
                };
                Ok(catalog.get(name).map_err(|e| anyhow!("material: {e}"))?.params)
            }
            (None, Some(c10)) => {
                if self.catalog.is_some() {
                    bail!("material: a catalog file only applies to a name lookup");
                }
                let d1 = self.d1_per_mpa.unwrap_or(0.0);
                let density = self.density_kg_m3.unwrap_or(1000.0);
                MaterialParams::new(c10, d1, density).map_err(|e| anyhow!("material: {e}"))
            }
        }
    }
}

/// Continuation solver settings. Every field is optional; the defaults
/// are the library's.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub n_elements: Option<usize>,
    pub initial_arc_mm: Option<f64>,
    pub min_arc_mm: Option<f64>,
    pub max_arc_mm: Option<f64>,
    pub residual_tol_rel: Option<f64>,
    pub target_iterations: Option<usize>,
    pub max_iterations: Option<usize>,
    pub max_steps: Option<usize>,
    pub pressure_overshoot: Option<f64>,
    pub max_volume_mm3: Option<f64>,
    pub max_volume_ratio: Option<f64>,
}

impl SolverConfig {
    pub fn n_elements(&self) -> usize {
        self.n_elements.unwrap_or(pv::DEFAULT_ELEMENTS)
    }

    /// Continuation control with the config's overrides applied, then the
    /// command line's volume cap on top.
    pub fn control(&self, cap_override_mm3: Option<f64>) -> ContinuationControl<f64> {
        let mut c = ContinuationControl::default();
        set(&mut c.initial_arc_mm, self.initial_arc_mm);
        set(&mut c.min_arc_mm, self.min_arc_mm);
        set(&mut c.max_arc_mm, self.max_arc_mm);
        set(&mut c.residual_tol_rel, self.residual_tol_rel);
        if let Some(n) = self.target_iterations {
            c.target_iterations = n;
        }
        if let Some(n) = self.max_iterations {
            c.max_iterations = n;
        }
        if let Some(n) = self.max_steps {
            c.max_steps = n;
        }
        set(&mut c.pressure_overshoot, self.pressure_overshoot);
        set(&mut c.max_volume_ratio, self.max_volume_ratio);
        if self.max_volume_mm3.is_some() {
            c.max_volume_mm3 = self.max_volume_mm3;
        }
        if cap_override_mm3.is_some() {
            c.max_volume_mm3 = cap_override_mm3;
        }
        c
    }
}

/// Where a chamber's pressure-volume characteristic comes from: a CSV
/// file exported earlier, or a chamber traced on the fly.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub csv: Option<PathBuf>,
    pub chamber: Option<ChamberConfig>,
    pub material: Option<MaterialConfig>,
}

impl SourceConfig {
    pub fn resolve(
        &self,
        base_dir: &Path,
        solver: &SolverConfig,
        cap_override_mm3: Option<f64>,
    ) -> Result<PvCharacteristic<f64>> {
        match (&self.csv, &self.chamber) {
            (Some(_), Some(_)) => {
                Err(invalid(anyhow!("give either csv or chamber, not both")))
            }
            (None, None) => Err(invalid(anyhow!("a csv path or a chamber table is required"))),
            (Some(path), None) => {
                if self.material.is_some() {
                    return Err(invalid(anyhow!("material only applies to a traced chamber")));
                }
                let full = base_dir.join(path);
                let file = fs::File::open(&full)
                    .with_context(|| format!("opening characteristic {}", full.display()))
                    .map_err(invalid)?;
                snapgrip_core::io::read_characteristic_csv(file)
                    .map_err(|e| invalid(anyhow!("reading characteristic {}: {e}", full.display())))
            }
            (None, Some(chamber)) => {
                let material = self
                    .material
                    .as_ref()
                    .ok_or_else(|| invalid(anyhow!("a traced chamber needs a material table")))?
                    .resolve(base_dir)?;
                let geo = chamber.geometry(None)?;
                let path = pv::chamber_path(
                    &geo,
                    &material,
                    solver.n_elements(),
                    &solver.control(cap_override_mm3),
                )?;
                Ok(PvCharacteristic::from_path(&path)?)
            }
        }
    }
}

/// `trace` document: one chamber, one material, solver settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub chamber: ChamberConfig,
    pub material: MaterialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// `sweep` document: the tilt angles to compare on one template.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub angles_deg: Vec<f64>,
    pub chamber: ChamberConfig,
    pub material: MaterialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// Fixture beam description; omit for the printed-part template.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub e_mpa: f64,
    pub segments: Vec<BeamSegmentConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSegmentConfig {
    pub length_mm: f64,
    pub i_moment_mm4: f64,
    pub theta_deg: f64,
}

impl BeamConfig {
    pub fn build(&self) -> Result<FixtureBeam<f64>> {
        self.build_raw().map_err(invalid)
    }

    fn build_raw(&self) -> Result<FixtureBeam<f64>> {
        let segments = self
            .segments
            .iter()
            .map(|s| BeamSegment::new(s.length_mm, s.i_moment_mm4, s.theta_deg))
            .collect::<snapgrip_core::Result<Vec<_>>>()
            .map_err(|e| anyhow!("beam: {e}"))?;
        FixtureBeam::new(segments, self.e_mpa).map_err(|e| anyhow!("beam: {e}"))
    }
}

pub fn build_fixture(beam: &Option<BeamConfig>) -> Result<FixtureBeam<f64>> {
    match beam {
        Some(cfg) => cfg.build(),
        None => Ok(FixtureBeam::default_template()),
    }
}

/// `beam` document: the beam and the tip load range to tabulate.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamCommandConfig {
    pub beam: Option<BeamConfig>,
    #[serde(default)]
    pub load: LoadConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadConfig {
    pub max_n: f64,
    pub steps: usize,
}

impl Default for LoadConfig {
    fn default() -> Self {
        Self { max_n: 5.0, steps: 50 }
    }
}

/// `network` document: the closed circuit and the injection protocol.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub contact: SourceConfig,
    pub gripping: SourceConfig,
    /// Gripping chambers in the circuit; the contact chamber is always
    /// singular.
    #[serde(default = "default_grip_count")]
    pub gripping_count: usize,
    /// Assemble the contact chamber already snapped through (the everted
    /// state the device ships in).
    #[serde(default = "default_true")]
    pub contact_pre_snapped: bool,
    #[serde(default)]
    pub parasitic_compliance_mm3_per_kpa: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    pub injection: InjectionConfig,
}

fn default_grip_count() -> usize {
    2
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionConfig {
    pub flow_mm3s: f64,
    pub duration_s: f64,
    pub steps: usize,
}

/// `grasp` document: circuit, fixture, gaps, object, press protocol.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspConfig {
    pub contact: SourceConfig,
    pub gripping: SourceConfig,
    #[serde(default = "default_grip_count")]
    pub gripping_count: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    pub fixture: Option<BeamConfig>,
    pub fixture_gap_mm: f64,
    pub contact_gap_mm: Option<f64>,
    pub snap_displacement_mm: Option<f64>,
    pub contact_area_mm2: Option<f64>,
    pub hold_pressure_kpa: Option<f64>,
    pub press_volume_mm3: Option<f64>,
    #[serde(default = "default_press_steps")]
    pub press_steps: usize,
    pub object: Option<ObjectConfig>,
}

fn default_press_steps() -> usize {
    200
}

/// The grasped object: its size and either a stiffness label from the
/// test-block set, the rigid marker, or a numeric stiffness.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub size_mm: f64,
    pub stiffness: Option<String>,
    pub k_o_n_per_mm: Option<f64>,
}

/// Nominal clamping stiffness of the cast silicone test blocks, by
/// catalog label. Ordering tracks hardness; the values are block-level
/// spring rates, not material constants.
pub fn block_stiffness_n_per_mm(label: &str) -> Option<f64> {
    match label {
        "ecoflex-gel-2" => Some(0.2),
        "ecoflex-00-10" => Some(0.8),
        "ecoflex-00-30" => Some(2.0),
        "dragon-skin-00-20" => Some(5.0),
        "dragon-skin-00-30" => Some(12.0),
        _ => None,
    }
}

impl ObjectConfig {
    pub fn build(&self) -> Result<ObjectModel<f64>> {
        self.build_raw().map_err(invalid)
    }

    fn build_raw(&self) -> Result<ObjectModel<f64>> {
        let stiffness = match (&self.stiffness, self.k_o_n_per_mm) {
            (Some(_), Some(_)) => {
                bail!("object: give either a stiffness label or k_o_n_per_mm, not both")
            }
            (None, None) => bail!("object: a stiffness label or k_o_n_per_mm is required"),
            (None, Some(k)) => ObjectStiffness::Finite(k),
            (Some(label), None) if label == "rigid" => ObjectStiffness::Rigid,
            (Some(label), None) => ObjectStiffness::Finite(
                block_stiffness_n_per_mm(label).ok_or_else(|| {
                    anyhow!(
                        "object: unknown stiffness label '{label}'; known blocks: \
                         ecoflex-gel-2, ecoflex-00-10, ecoflex-00-30, dragon-skin-00-20, \
                         dragon-skin-00-30, or 'rigid'"
                    )
                })?,
            ),
        };
        Ok(ObjectModel { size_mm: self.size_mm, stiffness })
    }
}

/// `calibrate` document: the chamber curve, the measured anchors, and an
/// optional plateau verification grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub source: SourceConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_contact_gap")]
    pub contact_gap_mm: f64,
    #[serde(default = "default_snap_displacement")]
    pub snap_displacement_mm: f64,
    pub anchors: Vec<AnchorConfig>,
    pub plateau: Option<PlateauConfig>,
}

fn default_contact_gap() -> f64 {
    2.0
}

fn default_snap_displacement() -> f64 {
    10.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorConfig {
    pub object_stiffness_n_per_mm: f64,
    pub injected_mm3: f64,
    pub pressure_kpa: f64,
}

/// Plateau-vs-stiffness grid evaluated with the calibrated fixture.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauConfig {
    pub stiffness_min_n_per_mm: f64,
    pub stiffness_max_n_per_mm: f64,
    pub points: usize,
    pub injected_mm3: f64,
}
