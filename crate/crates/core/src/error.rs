use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,

    #[error("division by the zero rational function")]
    DivisionByZero,

    #[error("degenerate composition: {0}")]
    Degenerate(String),

    #[error("pole on the imaginary axis at omega = {omega} rad/s")]
    PoleOnAxis { omega: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("improper transfer function for {what} (numerator degree {num} > denominator degree {den})")]
    Improper {
        what: String,
        num: usize,
        den: usize,
    },

    #[error("inconsistent topology: {0}")]
    Topology(String),

    #[error("simulation diverged at t = {time} s")]
    Divergence { time: f64 },

    #[error("linearization point is not an equilibrium (residual {residual:e})")]
    NonEquilibrium { residual: f64 },

    #[error("steady-state solve failed: {0}")]
    SteadyState(String),

    #[error("no load-step event found in trace")]
    NoEvent,

    #[error("record too short: {0}")]
    RecordTooShort(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
