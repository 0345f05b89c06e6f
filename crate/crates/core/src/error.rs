use thiserror::Error;

/// Errors raised by the distribution, coupling, bound and estimator layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse distribution spec `{spec}`: {reason}")]
    Parse { spec: String, reason: String },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("moment of order {order} is infinite for {law}")]
    InfiniteMoment { order: f64, law: String },

    #[error("age {age} is unsupported: F(age) = 1 for {law}")]
    UnsupportedAge { age: f64, law: String },

    #[error("distributions have no common part (kappa = 0)")]
    NoOverlap,

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("value outside simulated horizon: {0}")]
    OutOfHorizon(String),
}

pub type Result<T> = std::result::Result<T, Error>;
