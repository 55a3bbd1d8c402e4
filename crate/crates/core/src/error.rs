use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not hyperbolic: {0}")]
    NotHyperbolic(String),

    #[error("degenerate congruence: det(M^{n} {sign} I) = 0")]
    DegenerateCongruence { n: u32, sign: char },

    #[error("unsupported degree {0}: only |det| = 2 is supported")]
    UnsupportedDegree(String),

    #[error("invalid surgery profile: {0}")]
    InvalidProfile(String),

    #[error("saddle bracket failed near center {center:?}: {reason}")]
    SaddleNotFound { center: [f64; 2], reason: String },

    #[error("Newton iteration diverged after {} steps (last residual {:e})", .residuals.len(), .residuals.last().copied().unwrap_or(f64::NAN))]
    NewtonDiverged { residuals: Vec<f64> },

    #[error("attractor ball of radius {eps} around {center:?} is not forward invariant; shrink eps_attract")]
    TrappingBall { center: [f64; 2], eps: f64 },

    #[error("leaf segment collapsed: {0}")]
    SegmentCollapse(String),

    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
