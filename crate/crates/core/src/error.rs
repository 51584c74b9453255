use thiserror::Error;

/// Errors produced by state construction, channel application and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("null state")]
    NullState,
    #[error("mixture weights sum to {0} instead of 1")]
    WeightSum(f64),
    #[error("tensor factors overlap")]
    OverlappingFactors,
    #[error("states carry different factor signatures")]
    SignatureMismatch,
    #[error("selector names no tensor factor of this state")]
    MalformedSelector,
    #[error("alternate port {0} is occupied")]
    OccupiedAlternate(String),
    #[error("parameter {name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("alternate port only exists for sigma-A and pi-B")]
    InvalidAlternatePort,
    #[error("detector must watch an alternate port")]
    NotAnAlternatePort,
    #[error("no interfering amplitude")]
    NoInterferingAmplitude,
    #[error("zero conditioning probability")]
    ZeroConditioningProbability,
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("degenerate fringe fit: {0}")]
    DegenerateFit(String),
    #[error("matrix is not hermitian")]
    NotHermitian,
    #[error("eigenvalue {0} negative beyond tolerance")]
    NegativeEigenvalue(f64),
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("empty grid")]
    EmptyGrid,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
