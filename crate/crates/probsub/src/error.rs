use crate::qp::QpSolution;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("invalid graph instance: {0}")]
    InvalidInstance(String),

    #[error("invalid labeling: {0}")]
    InvalidLabeling(String),

    #[error("label set must have at least 2 labels, got {0}")]
    LabelSetTooSmall(usize),

    #[error("submodularity margin requires two distinct labels, got ({0}, {0})")]
    EqualLabels(usize),

    #[error("binary solver requires exactly 2 labels, got {0}; use map_multiclass")]
    NotBinary(usize),

    #[error("exhaustive search too large: {states} labelings exceed the {max} guard")]
    BruteForceTooLarge { states: u128, max: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible constraint system: {0}")]
    Infeasible(String),

    #[error("QP did not converge within {passes} passes (relative gap {gap:.3e}, feasibility {feasibility:.3e})")]
    QpNoConvergence {
        passes: usize,
        gap: f64,
        feasibility: f64,
        /// Best iterate found when the cap was hit.
        best: Box<QpSolution>,
    },

    #[error("training failed at outer iteration {iteration}: {source}")]
    Train {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
