use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("bundle check failed ({check}): {detail}")]
    BundleCheck { check: &'static str, detail: String },

    #[error("overlap matrix is nearly linearly dependent (smallest eigenvalue {0:e})")]
    NearLinearDependence(f64),

    #[error("MO coefficients are not orthogonal (max |C^T C - I| = {0:e})")]
    NonOrthogonal(f64),

    #[error("t = {0} is not on the loop grid")]
    OffGrid(f64),

    #[error("loop is not closed: max |H(0) - H(1)| = {0:e}")]
    NotClosed(f64),

    #[error("singular linear system")]
    Singular,

    #[error("optimization did not converge after {iterations} iterations (|grad|_inf = {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("real matrix logarithm does not exist: {0}")]
    RealLog(String),

    #[error("degenerate ground state on path at t = {t} (gap {gap:e})")]
    DegeneracyOnPath { t: f64, gap: f64 },

    #[error("path under-resolved at t = {t}: consecutive overlap {overlap:.3}; increase the number of dense points")]
    UnderResolved { t: f64, overlap: f64 },

    #[error("closing overlap {0:.3} too small to decide the phase")]
    Inconclusive(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
