use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spectral singularity: |M22| = {m22_abs:e} is below the threshold {threshold:e}")]
    SpectralSingularity { m22_abs: f64, threshold: f64 },

    #[error("transmission amplitude is zero")]
    ZeroTransmission,

    #[error("branch of the refractive index is ambiguous at tau = {tau}")]
    BranchAmbiguity { tau: f64 },

    #[error("degenerate spectrum at tau = {tau}: |n| = {n_abs:e}")]
    DegenerateSpectrum { tau: f64, n_abs: f64 },

    #[error("potential is not differentiable at tau = {tau}")]
    NonDifferentiable { tau: f64 },

    #[error("step size underflow at tau = {tau} (h = {step:e})")]
    StepUnderflow { tau: f64, step: f64 },

    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),

    #[error("truncation radius too small: enlarging it changed M by {change:e}")]
    TruncationTooSmall { change: f64 },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("order {order} is not supported by this method (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("malformed potential file (line {line}): {reason}")]
    MalformedFile { line: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name, used by the CLI in failure messages.
    pub fn name(&self) -> &'static str {
        match self {
            Error::SpectralSingularity { .. } => "SpectralSingularity",
            Error::ZeroTransmission => "ZeroTransmission",
            Error::BranchAmbiguity { .. } => "BranchAmbiguity",
            Error::DegenerateSpectrum { .. } => "DegenerateSpectrum",
            Error::NonDifferentiable { .. } => "NonDifferentiable",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::ToleranceNotMet(_) => "ToleranceNotMet",
            Error::TruncationTooSmall { .. } => "TruncationTooSmall",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::UnsupportedOrder { .. } => "UnsupportedOrder",
            Error::MalformedFile { .. } => "MalformedFile",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
