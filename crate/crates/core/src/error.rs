use thiserror::Error;

/// Errors raised by the geometry, zoo, verification and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QeError {
    #[error("degenerate metric at {0:?}")]
    DegenerateMetric(Vec<f64>),
    #[error("non-finite value while evaluating {0}")]
    Evaluation(String),
    #[error("point {0:?} outside the admissible domain")]
    Inadmissible(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error("unknown catalog entry or family '{0}'")]
    Unknown(String),
    #[error("loop does not close at the base point (gap {0:e})")]
    OpenLoop(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, QeError>;
