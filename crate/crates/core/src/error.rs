use core::fmt;

/// Errors raised by validation and numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// The class-1 arrival rate `lambda + c / sqrt(n)` is not positive.
    NonPositiveRate { n: u64, rate: f64 },
    /// The patience law has no hazard rate (only `HazardScaled` has one).
    NoHazard,
    /// Picard iteration did not reach the requested tolerance.
    NotConverged { residual: f64, iterations: usize },
    /// The a-priori bound is infinite (the limit function grows too fast).
    Unbounded,
    /// The stationary drift condition fails; the density may not be integrable.
    DriftCondition,
    /// Two grid functions have different steps or lengths.
    GridMismatch,
    /// A statistic was requested on an empty sample.
    EmptySample,
    /// A sample contains NaN.
    NotANumber,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid `{name}`: {reason}"),
            Error::NonPositiveRate { n, rate } => write!(
                f,
                "class-1 arrival rate per unit scale is {rate} at n = {n}; lambda + c/sqrt(n) must be positive"
            ),
            Error::NoHazard => write!(f, "patience law has no hazard rate"),
            Error::NotConverged {
                residual,
                iterations,
            } => write!(
                f,
                "fixed-point iteration stopped after {iterations} sweeps with residual {residual:e}"
            ),
            Error::Unbounded => write!(f, "a-priori bound is infinite for the given limit functions"),
            Error::DriftCondition => write!(
                f,
                "drift condition fails: need lim H_1 > c/lambda when c >= 0 and lim H_-1 > -c/lambda when c <= 0"
            ),
            Error::GridMismatch => write!(f, "grid functions are not conformable"),
            Error::EmptySample => write!(f, "empty sample"),
            Error::NotANumber => write!(f, "sample contains NaN"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
