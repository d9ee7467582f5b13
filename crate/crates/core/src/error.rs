use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("structure syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("component c{0} appears more than once")]
    DuplicateComponent(usize),
    #[error("component c{0} is missing (indices must cover 1..=K)")]
    MissingComponent(usize),
    #[error("composite node needs at least two children")]
    TooFewChildren,
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("component index {index} out of range 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("time {0} must be finite and non-negative")]
    InvalidTime(f64),
    #[error("sample is empty")]
    EmptySample,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shrinkage coefficient must be positive, got {0}")]
    NonPositiveCoefficient(f64),
    #[error("estimate has no component curves to shrink")]
    MissingComponentCurves,
    #[error("no component has an observed failure; shrinkage coefficient is undefined")]
    NoInformation,
    #[error("objective is non-finite at every grid point")]
    NonFiniteObjective,
    #[error("quadratic coefficients violate sign constraints (A={a}, B={b}, D={d})")]
    SignViolation { a: f64, b: f64, d: f64 },
    #[error("{skipped} of {total} bootstrap resamples were degenerate")]
    TooManyDegenerateResamples { skipped: usize, total: usize },
    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Failures of the numerical procedures, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NoInformation
                | Error::NonFiniteObjective
                | Error::SignViolation { .. }
                | Error::TooManyDegenerateResamples { .. }
                | Error::AllReplicationsFailed(_)
        )
    }
}
