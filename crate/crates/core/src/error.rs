use thiserror::Error;

/// Every failure the engine can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("index out of range: {what} = {index}, limit {limit}")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("non-finite {term} in {row}")]
    Evaluation { row: String, term: String },

    #[error("finite-difference probe left the model domain: {0}")]
    Probe(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("state outside model domain: {0}")]
    Domain(String),

    #[error("balance system has no solution (residual {residual:.3e}): model defect")]
    Inconsistent { residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("temperature left the positive range at t = {t}, x = {x}")]
    BlowUp { t: f64, x: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
