use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("volume must be positive and finite, got {0}")]
    NonPositiveVolume(f64),

    #[error("isoperimetric violation: area {area} below c0*v^(2/3) = {min_area} at v = {volume}")]
    Isoperimetric { area: f64, volume: f64, min_area: f64 },

    #[error("excess area must be finite and non-negative, got {0}")]
    NegativeExcess(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("closed-form fusion flow needs mu = 0, got mu = {0}")]
    ClosedFormUnavailable(f64),

    #[error("fusion integrator failed for particle (v = {v}, e = {e}): {reason}")]
    Integrator { v: f64, e: f64, reason: String },

    #[error("time step {dt} exceeds the {which} stability bound {bound}")]
    Stability { dt: f64, bound: f64, which: &'static str },

    #[error("moment M_{{{k},{l}}} is not finite")]
    NonFiniteMoment { k: f64, l: f64 },

    #[error("system has no particles")]
    EmptySystem,

    #[error("marginals are defined on different bin edges")]
    EdgeMismatch,

    #[error("sampler stalled: {accepted} of {proposals} proposals accepted")]
    Stalled { accepted: u64, proposals: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }
}
