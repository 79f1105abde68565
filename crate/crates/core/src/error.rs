use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M_ij - conj(M_ji)| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("time {t} lies outside the source window [{start}, {end}]")]
    SourceOutOfWindow { t: f64, start: f64, end: f64 },

    #[error("index {index} out of range (valid: {valid})")]
    IndexOutOfRange { index: usize, valid: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("sample times must be strictly increasing (violated at sample {index})")]
    NonMonotoneTimes { index: usize },

    #[error("spectrum is degenerate at t = {t} (gap {gap:e})")]
    DegenerateSpectrum { t: f64, gap: f64 },

    #[error("branch matching is ambiguous at t = {t}")]
    BranchMatchAmbiguous { t: f64 },

    #[error("time grids differ between trace and frame")]
    GridMismatch,

    #[error("dual eigenvector residual {residual:e} exceeds tolerance")]
    EigenResidualTooLarge { residual: f64 },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("need at least {required} samples, got {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
