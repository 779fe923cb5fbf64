use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModeVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(#[from] ConfigError),

    #[error("basis has {count} states, above the limit of {limit}")]
    BasisTooLarge { count: u128, limit: usize },

    #[error("occupation encoding needs {needed} bits but only 128 are available")]
    EncodingOverflow { needed: u32 },

    #[error("sector with total momentum {momentum} is empty")]
    EmptySector { momentum: ModeVector },

    #[error("operator expects a {expected} sector, got {got}")]
    WrongSectorKind { expected: &'static str, got: &'static str },

    #[error("momentum conservation violated: row {row} reaches an in-cutoff state missing from the sector")]
    MomentumViolation { row: usize },

    #[error("assembled operator is not Hermitian: entry ({row}, {col}) differs from its transpose by {diff:e}")]
    NotHermitian { row: usize, col: usize, diff: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector norm {norm} is not 1 within 1e-10")]
    NotNormalized { norm: f64 },

    #[error("sectors are incompatible: {0}")]
    IncompatibleSectors(String),

    #[error("excitation cutoff too small: discarded weight {discarded:e} exceeds {limit:e}")]
    CutoffTooSmall { discarded: f64, limit: f64 },

    #[error("level {level} is not available as a converged eigenvector")]
    LevelNotConverged { level: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all values are at the numerical floor (below 1e-13); no fit")]
    AtNumericalFloor,

    #[error("power-law fit needs at least {needed} positive points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("malformed record in {path}: {msg}")]
    MalformedRecord { path: PathBuf, msg: String },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse failure: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("positive type violated: v at n={n} is {value}")]
    PositiveTypeViolated { n: ModeVector, value: f64 },

    #[error("evenness violated for {which} at n={n}: {value} vs {mirror}")]
    EvennessViolated {
        which: &'static str,
        n: ModeVector,
        value: f64,
        mirror: f64,
    },

    #[error("support of {which} (radius {radius}) exceeds the cutoff {cutoff}")]
    SupportExceedsCutoff {
        which: &'static str,
        radius: u32,
        cutoff: u32,
    },

    #[error("invalid parameter: {0}")]
    Invalid(String),
}
