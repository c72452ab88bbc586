use thiserror::Error;

use crate::transport::CurveState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular matrix: pivot {pivot:e} not above threshold {threshold:e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("metric `{label}` is singular or undefined at {point:?}")]
    SingularMetric { label: String, point: Vec<f64> },

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("metric `{label}` does not support {what}")]
    UnsupportedMetric { label: String, what: &'static str },

    #[error("integration aborted at tau = {tau}: {reason}")]
    IntegrationAborted {
        tau: f64,
        reason: String,
        last: Box<CurveState>,
    },

    #[error("acceleration not orthogonal to velocity at tau = {tau}: g(a, V) = {inner:e}")]
    InvalidAcceleration { tau: f64, inner: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("integration diverged at tau = {tau}")]
    Diverged { tau: f64 },

    #[error("coefficient matrix depends on the state; a reference phase state is required")]
    MissingReference,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Config(#[from] crate::scenario::ConfigError),

    #[error("stage `{stage}` failed")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Wraps `self` with a pipeline stage label.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
