use thiserror::Error;

/// Errors raised by model construction, the spectral-flow engines and the
/// APS solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes, block layouts or models do not fit together.
    #[error("structural error: {0}")]
    Structure(String),
    /// An input violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// A parameter lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition of an operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// An iterative or adaptive computation failed to converge.
    #[error("numeric error in {op}: {msg}")]
    Numeric {
        op: &'static str,
        msg: String,
        /// Partial estimate, when one is available.
        partial: Option<f64>,
    },
    /// The operator model cannot represent the requested quantity.
    #[error("model error: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn numeric(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Numeric {
            op,
            msg: msg.into(),
            partial: None,
        }
    }

    pub(crate) fn numeric_partial(op: &'static str, msg: impl Into<String>, partial: f64) -> Self {
        Error::Numeric {
            op,
            msg: msg.into(),
            partial: Some(partial),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
