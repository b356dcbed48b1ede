use thiserror::Error;

/// Failures raised while building grids, windows, filters or while propagating.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The admissible interval for the window steepness is empty.
    #[error(
        "window steepness interval is empty: need L*kmax >= 64*erfc^-1(delta1)^2 \
         (L*kmax = {l_kmax:.6}, required {required:.6})"
    )]
    InfeasibleSigma { l_kmax: f64, required: f64 },

    #[error("argument {value} is outside the domain of {function}")]
    DomainError { function: &'static str, value: f64 },

    #[error("scale {m} is out of range (grid has scales 0..={max})")]
    ScaleOutOfRange { m: usize, max: usize },

    /// Input data is not localized well enough in phase space for dyadic downsampling.
    #[error("phase-space localization defect {defect:.3e} on scale {m} exceeds limit {limit:.3e}")]
    AssumptionViolation { m: usize, defect: f64, limit: f64 },

    #[error("input to spectral interpolation carries {relative:.3e} relative mass above the band on scale {m}")]
    BandLimitViolation { m: usize, relative: f64 },

    /// The filter margins do not fit inside the box or the frequency band.
    #[error("filter margins infeasible: {reason}")]
    FilterInfeasible { reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid run plan: {0}")]
    InvalidPlan(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
