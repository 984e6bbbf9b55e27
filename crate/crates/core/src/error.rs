use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid size {0}: need an even number of points, at least 16")]
    InvalidGrid(usize),

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("fields live on different grids ({left} vs {right} points)")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("interpolation exponent {0} outside (0, 1]")]
    ExponentOutOfRange(f64),

    #[error("quadrature residue {residue:e} in {what} should vanish")]
    ImaginaryResidue { what: &'static str, residue: f64 },

    #[error("integration blew up at step {step}")]
    Diverged { step: u64 },

    #[error("step budget exceeded: {steps} steps requested (limit {limit})")]
    StepBudget { steps: u64, limit: u64 },

    #[error("spectral parameter {lambda} needs more than {max_steps} transfer steps")]
    Resolution { lambda: f64, max_steps: usize },

    #[error("window endpoint {lambda} lies on the spectrum (|disc| - 2 = {gap:e})")]
    EndpointOnSpectrum { lambda: f64, gap: f64 },

    #[error("double eigenvalue at {0}: eigenvector is not unique")]
    DoublePoint(f64),

    #[error("eigenfunction residual {residual:e} exceeds {tolerance:e} at lambda = {lambda}")]
    Residual {
        lambda: f64,
        residual: f64,
        tolerance: f64,
    },

    #[error("lost track of eigenvalue near {0}")]
    TrackingLost(f64),

    #[error("spectra have different windows")]
    WindowMismatch,

    #[error("matrix dimension {0} exceeds the dense solver budget")]
    TooLarge(usize),

    #[error("eigenvalue {lambda} lies within three modes of the truncation edge {limit}")]
    Truncation { lambda: f64, limit: f64 },

    #[error("no invariant with index {0}; expected one of 1, 2, 3, 5")]
    UnknownInvariant(u32),
}
