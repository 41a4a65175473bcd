use std::path::PathBuf;

/// Errors produced by the numerical core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain has no interior points at h = {h}; refine the grid")]
    EmptyInterior { h: f64 },

    #[error("cannot read mask file {path}: {source}")]
    MaskIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed mask file {path}, line {line}: {message}")]
    MaskFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{kind} potential is critical or supercritical: mu = {mu} >= mu* = {mu_star}; use the critical-case formulas")]
    Critical {
        kind: &'static str,
        mu: f64,
        mu_star: f64,
    },

    #[error("eigensolver did not converge after {iterations} Lanczos vectors ({converged} of {wanted} pairs converged)")]
    NoConvergence {
        iterations: usize,
        converged: usize,
        wanted: usize,
        /// Best available eigenvalue estimates, ascending.
        partial: Vec<f64>,
    },

    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:e})")]
    CgStalled { iterations: usize, residual: f64 },

    #[error("non-finite value in field after step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("tangent bundle is rank deficient (R[{index}][{index}] = {value:e}); use a shorter re-orthonormalization interval")]
    RankDeficient { index: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
