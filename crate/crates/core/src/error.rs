use thiserror::Error;

/// Errors raised by the model, landscape and experiment routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RfcwError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("capacity exceeded: {what} = {got} (limit {limit})")]
    Capacity {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no root bracketed: {0}")]
    Domain(String),

    #[error("numerical failure: {message} (bracket [{lo}, {hi}])")]
    Numerical { message: String, lo: f64, hi: f64 },

    #[error("quadrature did not converge: achieved relative error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error(
        "cannot classify maximum at y = {location}: no degeneracy order up to {max_order} fits"
    )]
    Classification { location: f64, max_order: usize },
}

impl RfcwError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        RfcwError::Argument(msg.into())
    }

    /// True for errors caused by bad input rather than a numerical breakdown.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            RfcwError::Argument(_)
                | RfcwError::Capacity { .. }
                | RfcwError::Precondition(_)
                | RfcwError::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, RfcwError>;
