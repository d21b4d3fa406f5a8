use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{scheme} iteration produced non-finite values at iteration {iteration}")]
    Divergence { scheme: String, iteration: usize },

    #[error("{scheme} failed to converge (final residual {residual:.3e})")]
    NonConvergent { scheme: String, residual: f64 },

    #[error("resolvent is singular at z0 = {z0}; nearest eigenvalue {nearest}")]
    SingularResolvent { z0: Complex64, nearest: f64 },

    #[error("dense assembly guard exceeded: dimension {dim} > limit {limit}")]
    DenseGuard { dim: usize, limit: usize },

    #[error("contrast t = {t} is the pole -beta of the substitution map")]
    MapPole { t: Complex64 },

    #[error("degenerate spectral interval (alpha = beta)")]
    DegenerateInterval,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
