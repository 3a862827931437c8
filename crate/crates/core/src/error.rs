//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the chamber models, solvers, and analyses.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input or intermediate value was NaN or infinite.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// Invalid material parameters.
    #[error("invalid material: {0}")]
    Material(String),

    /// Catalog lookup failed; lists the known entries.
    #[error("unknown material '{name}'; available: {}", available.join(", "))]
    UnknownMaterial { name: String, available: Vec<String> },

    /// Geometrically infeasible chamber parameters.
    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// Mesh construction or evaluation failure.
    #[error("invalid mesh: {0}")]
    Mesh(String),

    /// The meridian profile crosses itself.
    #[error("self-intersecting meridian profile (segments {0} and {1})")]
    SelfIntersecting(usize, usize),

    /// A factorization hit a numerically zero pivot.
    #[error("singular tangent stiffness (zero pivot at index {pivot})")]
    SingularTangent { pivot: usize },

    /// Solver failure that leaves no usable result.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Invalid beam description.
    #[error("invalid beam: {0}")]
    Beam(String),

    /// Path analysis precondition failure.
    #[error("invalid path: {0}")]
    Path(String),

    /// No pressure-limit point exists on the path.
    #[error("no critical pressure: the path has no pressure-limit point")]
    NoCriticalPressure,

    /// Snap analysis on a path without a snap-through fold.
    #[error("monostable path: no volume-limit point to release energy across")]
    Monostable,

    /// Network construction or state failure.
    #[error("network error: {0}")]
    Network(String),

    /// No shared pressure balances the requested liquid volume.
    #[error("infeasible network volume: {0}")]
    InfeasibleVolume(String),

    /// Snap cascade failed to settle.
    #[error("snap cascade did not settle after {rounds} rounds")]
    CascadeDiverged { rounds: usize },

    /// Requested state lies outside a characteristic's coverage.
    #[error("volume out of characteristic coverage: {0}")]
    OutOfCoverage(String),

    /// Scenario or configuration validation failure.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// Calibration failure.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Characteristic CSV ingestion failure.
    #[error("characteristic ingest error: {0}")]
    Ingest(String),

    /// Reading or writing a data stream failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
