use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum PfcError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different grids (M={left} vs M={right})")]
    GridMismatch { left: usize, right: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("spectrum is not conjugate-symmetric: imaginary residue {residue:.3e} after inverse transform")]
    AsymmetricSpectrum { residue: f64 },

    #[error("inverse Laplacian needs a zero-mean field, residual mass {mass:.3e}")]
    NonZeroMean { mass: f64 },

    #[error("E1(phi) + C0 = {radicand:.6e} is not positive; C0 too small")]
    C0TooSmall { radicand: f64 },

    #[error("scalar solve denominator {value:.6e} <= 0; this violates the provable bound and indicates a bug")]
    ScalarSolveDenominator { value: f64 },

    #[error("run aborted at step {step} (state dump: {dump}): {source}")]
    Aborted { step: u64, dump: String, source: Box<PfcError> },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("snapshot file {path}: {message}")]
    Snapshot { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PfcError>;
