use thiserror::Error;

/// Errors raised by the spectral pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid surface specification: {0}")]
    InvalidSpec(String),

    #[error("surgery factor is undefined at (epsilon, r) = (0, 0)")]
    SurgeryAtTip,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-positive weight {weight} at s = {s}")]
    NonPositiveWeight { s: f64, weight: f64 },

    #[error("incompatible profiles: {0}")]
    IncompatibleProfiles(String),

    #[error("incompatible eigensystems: {0}")]
    IncompatibleSystems(String),

    #[error("mode {mode}: {count} eigenvalues below the cutoff exceed the resolution capacity of {capacity} for {nodes} nodes")]
    ResolutionExceeded {
        mode: u32,
        count: usize,
        capacity: usize,
        nodes: usize,
    },

    #[error("spectrum has no eigenvalue above the kernel threshold")]
    EmptySpectrum,

    #[error("eigenvectors were not stored for this eigensystem")]
    MissingEigenvectors,

    #[error("heat kernel mode sum not converged at t = {t}: tail {tail:e} vs value {value:e}")]
    KernelNotConverged { t: f64, tail: f64, value: f64 },

    #[error("heat invariant fit residual {residual:e} exceeds threshold {threshold:e}")]
    FitResidual { residual: f64, threshold: f64 },

    #[error("not enough samples in fit window: {have} < {need}")]
    TooFewSamples { have: usize, need: usize },

    #[error("error budget exceeded: {0}")]
    Budget(String),

    #[error("eigensolver failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
