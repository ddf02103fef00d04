//! Crate-wide error type with a coarse classification that the command-line
//! frontend maps onto process exit codes.

use crate::affordance::Affordance;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class. Input and schema problems are `Validation`,
/// undefined or non-finite computations are `Numeric`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numeric,
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("viewpoint set: {0}")]
    InvalidViewpointSet(String),

    #[error("viewpoint {id}: elevation {theta} outside [0, pi/2]")]
    ElevationOutOfRange { id: u32, theta: f64 },

    #[error("duplicate viewpoint id {0}")]
    DuplicateViewpoint(u32),

    #[error("unknown viewpoint id {0}")]
    UnknownViewpoint(u32),

    #[error("radius mismatch: {0} vs {1}")]
    RadiusMismatch(f64, f64),

    #[error("centroid undefined: member directions cancel out")]
    DegenerateCentroid,

    #[error("row {row}: {reason}")]
    InvalidTrial { row: u64, reason: String },

    #[error("trial header must be exactly `{expected}`, got `{got}`")]
    BadTrialHeader { expected: String, got: String },

    #[error("no trial records")]
    EmptyTrials,

    #[error("subject {subject}: {measure} values have zero spread, z-scores undefined")]
    ZeroSubjectSpread { subject: u32, measure: &'static str },

    #[error("weights: {0}")]
    BadWeights(String),

    #[error("no performance samples for {affordance} at viewpoints {viewpoints:?}")]
    UncoveredViewpoints {
        affordance: Affordance,
        viewpoints: Vec<u32>,
    },

    #[error("cannot impute viewpoint {id}: no sampled viewpoint shares its group")]
    ImputeNoDonor { id: u32 },

    #[error("{affordance}: value field is flat, z-scores undefined")]
    FlatValueField { affordance: Affordance },

    #[error("value field incomplete: {0}")]
    IncompleteField(String),

    #[error("empty performance sample set")]
    EmptySamples,

    #[error("cluster count {k} outside [{min}, {max}]")]
    BadClusterCount { k: usize, min: usize, max: usize },

    #[error("partition: {0}")]
    BadPartition(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("two-way model: factor level `{0}` shares no cells with the rest of the design")]
    DisconnectedLevel(String),

    #[error("no manifold model for {0}")]
    MissingModel(Affordance),

    #[error("task plan has no actions")]
    EmptyPlan,

    #[error("cardinal rules: {0}")]
    BadRules(String),

    #[error("config: {0}")]
    BadConfig(String),

    #[error("synthetic spec: {0}")]
    BadSyntheticSpec(String),

    #[error("reference check: {0}")]
    ReferenceMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            ZeroSubjectSpread { .. }
            | FlatValueField { .. }
            | DegenerateCentroid
            | Stats(_)
            | DisconnectedLevel(_) => ErrorKind::Numeric,
            Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }

    /// Wraps an I/O error with the path it occurred on.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
