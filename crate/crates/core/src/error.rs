use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcsError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("geometry inconsistency: cos(zenith) = {cos_zenith} is outside [-1, 1]")]
    GeometryInconsistency { cos_zenith: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "sparse-regime violation: rate * t_bin = {product} (must be < {limit}); \
         each photon should carry a unique time stamp"
    )]
    DenseRegime { product: f64, limit: f64 },

    #[error("timestamp sets use different tick sizes ({a} s vs {b} s)")]
    TickMismatch { a: f64, b: f64 },

    #[error("histogram has {bins} bins, at least {required} are needed for noise statistics")]
    TooFewBins { bins: usize, required: usize },

    #[error("ambiguous correlation peak: {n_ab} bins above threshold in C_AB, {n_ba} in C_BA")]
    AmbiguousPeak { n_ab: usize, n_ba: usize },

    #[error("protocol failed: no (t_bin, t_acq) setting met SNR >= {snr_threshold} and peak >= {n_min}")]
    ProtocolFailure { snr_threshold: f64, n_min: f64 },

    #[error("malformed timestamp dump: {0}")]
    MalformedDump(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for QcsError {
    fn from(e: std::io::Error) -> Self {
        QcsError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QcsError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> QcsError {
    QcsError::InvalidParameter { name, reason: reason.into() }
}
