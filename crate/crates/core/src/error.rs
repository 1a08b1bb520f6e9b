//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown method name `{0}`")]
    UnknownMethod(String),

    #[error("abscissae must be distinct, got duplicate pair ({0}, {1})")]
    DuplicateAbscissae(f64, f64),

    #[error("matrix is singular: {0}")]
    SingularMatrix(String),

    #[error("reconstructed tableau fails order verification: residual {0:.3e}")]
    ReconstructionInconsistency(f64),

    #[error("stability matrix pole at z1 = 1/lambda")]
    StabilityPole,

    #[error("Newton iteration failed to converge after {iters} iterations (residual {residual:.3e})")]
    NewtonDiverged { iters: usize, residual: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("time span ({t_span:.17e}) is not an integer multiple of stepsize ({h:.17e})")]
    GridMismatch { t_span: f64, h: f64 },

    #[error("no step has been taken")]
    NoStepTaken,

    #[error("exact-derivative starting data is unavailable for this problem")]
    MissingDerivatives,

    #[error("negative water height at node {0}")]
    NegativeHeight(usize),

    #[error("grid too small: need at least {need} nodes, got {got}")]
    GridTooSmall { need: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
