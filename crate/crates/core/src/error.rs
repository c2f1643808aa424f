use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration or problem field is out of its valid range.
    InvalidInput(&'static str),
    /// Pathloss evaluated at a non-positive distance.
    NonPositiveDistance(f64),
    /// Quantile levels collapsed: the sample set has fewer distinct values
    /// than the requested table size.
    DuplicateLevel { level: usize },
    /// Received power ratio outside `(0, 1 + tolerance]`.
    MalformedSignal { ratio: f64 },
    /// The dual function evaluated to a non-finite value.
    NumericalFailure { iteration: usize },
    /// Exhaustive enumeration would exceed the assignment budget.
    InstanceTooLarge { assignments: f64, limit: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(what) => write!(f, "invalid input: {what}"),
            Error::NonPositiveDistance(d) => write!(f, "distance must be positive, got {d} m"),
            Error::DuplicateLevel { level } => write!(
                f,
                "quantization level {level} duplicates its predecessor; not enough distinct samples"
            ),
            Error::MalformedSignal { ratio } => {
                write!(f, "received power ratio {ratio} is outside (0, 1]")
            }
            Error::NumericalFailure { iteration } => {
                write!(f, "dual value became non-finite at iteration {iteration}")
            }
            Error::InstanceTooLarge { assignments, limit } => write!(
                f,
                "exhaustive search needs {assignments:.3e} assignments, limit is {limit}"
            ),
        }
    }
}

impl core::error::Error for Error {}
