//! Bistable snap-through fluidic chambers: hyperelastic membrane models,
//! equilibrium path continuation, pressure-volume analysis, closed-circuit
//! chamber networks, and grasping scenarios built on them.
//!
//! Internal unit system: millimetres, newtons, megapascals, cubic
//! millimetres. Pressures cross the public API in kilopascals and angles in
//! degrees.
//!
//! The crate is generic over the scalar type through [`scalar::Real`];
//! `f64` aliases for the main types live at the root.

pub mod beam;
pub mod calibrate;
pub mod error;
pub mod geometry;
pub mod grasp;
pub mod io;
pub mod linalg;
pub mod materials;
pub mod membrane;
pub mod mesh;
pub mod network;
pub mod path;
pub mod pv;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision fixture beam.
pub type Beam64 = beam::FixtureBeam<f64>;
/// Double-precision chamber geometry.
pub type Geometry64 = geometry::ChamberGeometry<f64>;
/// Double-precision material parameters.
pub type Material64 = materials::MaterialParams<f64>;
/// Double-precision meridian mesh.
pub type Mesh64 = mesh::MeridianMesh<f64>;
/// Double-precision membrane model.
pub type Membrane64 = membrane::MembraneModel<f64>;
/// Double-precision equilibrium path.
pub type Path64 = path::EquilibriumPath<f64>;
/// Double-precision pressure-volume characteristic.
pub type Characteristic64 = network::PvCharacteristic<f64>;
/// Double-precision chamber circuit.
pub type Network64 = network::HydraulicNetwork<f64>;
/// Double-precision grasp scenario.
pub type Scenario64 = grasp::GraspScenario<f64>;
