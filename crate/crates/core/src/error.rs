use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("link gain {gain} is not positive; the device cannot upload this slot")]
    InfeasibleLink { gain: f64 },

    #[error("capacity violated: utilization {utilization:.6} exceeds 1")]
    CapacityViolation { utilization: f64 },

    #[error("energy infeasible: level would drop to {level:.6} J")]
    EnergyInfeasible { level: f64 },

    #[error("model violation: level {level:.6} J exceeds capacity {capacity:.6} J")]
    ModelViolation { level: f64, capacity: f64 },

    #[error("model build error: {0}")]
    Build(String),

    #[error("LP export error: {0}")]
    Export(String),

    #[error("GMM fit error: {0}")]
    Fit(String),

    #[error("instance too large for exhaustive search: {binaries} binaries (limit {limit})")]
    TooLarge { binaries: usize, limit: usize },

    #[error("model has {variables} variables, above the exact-solver cap of {cap}; configure an external solver")]
    ModelTooLarge { variables: usize, cap: usize },

    #[error("external solver process failed: {0}")]
    SolverProcess(String),

    #[error("could not parse solver output: {0}")]
    SolverOutput(String),

    #[error("solver reported the model infeasible")]
    SolverInfeasible,

    #[error("scheduler {scheduler} failed at slot {slot}: {message}")]
    Scheduler {
        scheduler: String,
        slot: usize,
        message: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
