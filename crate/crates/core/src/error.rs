use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("grid node count must be even and positive, got {0}")]
    OddNodeCount(usize),

    #[error("kernel evaluation at (s={s}, t={t}) returned non-finite value {value}")]
    KernelEvaluation { s: f64, t: f64, value: f64 },

    #[error("matrix is not symmetric: relative asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("eigensolver did not converge; off-diagonal norm reached {off_norm:e}")]
    NoConvergence { off_norm: f64 },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("kernel has alpha={kernel} but weight has alpha={weight}")]
    AlphaMismatch { kernel: f64, weight: f64 },

    #[error("quadrature did not converge; achieved error estimate {estimate:e}")]
    QuadratureNotConverged { estimate: f64 },

    #[error("empty eigenvalue list")]
    EmptySpectrum,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
