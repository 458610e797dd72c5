use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),

    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("reference distribution assigns zero probability to symbol {symbol} which has mass {mass}")]
    NotAbsolutelyContinuous { symbol: usize, mass: f64 },

    #[error("log-probability of zero-mass symbol {0} requested")]
    ZeroProbability(usize),

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("malformed context: {0}")]
    MalformedContext(String),

    #[error("horizon {n} is shorter than leaf count {leaves}")]
    HorizonTooShort { n: u64, leaves: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window length {got} does not match required length {expected}")]
    WindowLength { expected: usize, got: usize },

    #[error("observation has zero probability under the model at step {0}")]
    ZeroProbabilityObservation(usize),

    #[error("instance too large for exact enumeration: {0}")]
    InstanceTooLarge(String),

    #[error("lifted chain is not ergodic: {0}")]
    NonErgodic(String),

    #[error("node sets are not disjoint")]
    NotDisjoint,

    #[error("trace has no ground-truth column")]
    TruthMissing,

    #[error("trace did not retain predictor snapshots")]
    MissingSnapshots,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid price series: {0}")]
    InvalidSeries(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics or model assumptions, as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotAbsolutelyContinuous { .. }
                | Error::ZeroProbability(_)
                | Error::ZeroProbabilityObservation(_)
                | Error::NonErgodic(_)
                | Error::InstanceTooLarge(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
