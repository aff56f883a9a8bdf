use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spin subspace cannot hold {excitations} excitations on {sites} sites")]
    SpinOverflow { sites: usize, excitations: usize },
    #[error("occupation cap {cap} leaves no state with {excitations} excitations on {sites} sites")]
    CapacityOverflow { sites: usize, excitations: usize, cap: u32 },
    #[error("spec does not fit basis: {0}")]
    SpecMismatch(String),
    #[error("bad gauge: {0}")]
    BadGauge(String),
    #[error("no closed-form coefficients for n = {0}")]
    NotDerived(usize),
    #[error("profile has length {got}, expected {expected} or 1")]
    ProfileLength { expected: usize, got: usize },
    #[error("matrix is not Hermitian (defect {0:e})")]
    NonHermitian(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time {0} lies outside the trajectory grid")]
    OutOfGrid(f64),
    #[error("empty time window or node list")]
    EmptyWindow,
    #[error("no node reaches the peak threshold")]
    NoPeaks,
    #[error("operation requires spin statistics")]
    NotSpin,
    #[error("singular corner projection: {0}")]
    SingularProjection(String),
    #[error("bad initial state: {0}")]
    BadInitial(String),
    #[error("step {dt} exceeds limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("argument {0} out of supported range")]
    OutOfRange(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
