use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("deterministic R excluded: sigma2 and the jump intensity are both zero")]
    DeterministicModel,

    #[error("jump of R at or below -1 (got {0}); jumps must lie in (-1, inf)")]
    JumpSupport(f64),

    #[error("infinite-activity jump measures are not supported (intensity {0})")]
    InfiniteActivity(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature failed to reach tolerance {tol:e} on {what}")]
    Quadrature { what: &'static str, tol: f64 },

    #[error("invalid path grid: {0}")]
    InvalidGrid(String),

    #[error("empty sample set")]
    EmptySample,

    #[error("need at least {needed} positive samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("need at least {needed} usable tail points, got {got}")]
    InsufficientTailPoints { needed: usize, got: usize },

    #[error("tail window is empty")]
    EmptyWindow,

    #[error("no positive root of the cumulant: {0}")]
    NoBeta(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("numerical quality: {0}")]
    Quality(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
