use std::path::PathBuf;

use crate::maneuver::Maneuver;

/// Errors produced across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible maneuver {from} -> {to}: {reason}")]
    Infeasible {
        from: String,
        to: String,
        reason: String,
    },

    #[error("solver did not converge after {iterations} iterations (violation {violation:.3e}, stationarity {stationarity:.3e})")]
    Convergence {
        iterations: usize,
        violation: f64,
        stationarity: f64,
        best: Box<Maneuver>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("failed to build automaton; failed pairs: {}", .0.join(", "))]
    Build(Vec<String>),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("unsupported file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("no collision-free plan within the horizon")]
    PlanInfeasible { expanded: usize },

    #[error("expansion cap of {cap} nodes exceeded")]
    ExpansionCap { cap: usize, expanded: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
