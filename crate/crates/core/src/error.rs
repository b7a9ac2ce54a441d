use thiserror::Error;

use crate::simulate::Trajectory;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The field point lies on the circle, where the potential is singular.
    #[error("point on circle (distance to circle is zero)")]
    OnCircle,

    /// The step size collapsed before reaching `t_end` or the collision cutoff.
    /// The trajectory integrated so far is kept.
    #[error("integration failure at t = {t}: {reason}")]
    IntegrationFailure {
        t: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    /// An operation was called on data in the wrong state.
    #[error("invalid state: {0}")]
    State(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
