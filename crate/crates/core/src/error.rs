use thiserror::Error;

/// Errors raised by the simulator, the spectral analysis and the benchmark harness.
#[derive(Debug, Error)]
pub enum QgaError {
    /// An index or dimension lies outside the admissible range.
    #[error("range error: {0}")]
    Range(String),

    /// An operator failed a structural precondition (unitarity, Kraus completeness, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Inconsistent configuration, e.g. a reset state that does not match the cloner.
    #[error("configuration error: {0}")]
    Config(String),

    /// A dense representation was requested beyond the configured size cap.
    #[error("size error: {0}")]
    Size(String),

    /// An iterative eigensolver ran out of restarts.
    #[error("eigensolver did not converge after {restarts} restarts (best residual {best_residual:.3e})")]
    Convergence { restarts: usize, best_residual: f64 },

    /// Aggregation over an empty record set.
    #[error("no records to aggregate: {0}")]
    EmptyStats(String),

    /// A resumed experiment was started with a different configuration.
    #[error("resume conflict: {0}")]
    ResumeConflict(String),

    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QgaError>;
