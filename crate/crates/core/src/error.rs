use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum NlcsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capability not available: {0}")]
    Capability(&'static str),
    #[error("matrix is not positive definite: {0}")]
    Factorization(String),
    #[error("no convergence after {iterations} iterations (best estimate {best})")]
    Convergence { best: f64, iterations: usize },
    #[error("non-finite evaluation at {location:?}")]
    Evaluation { location: Vec<f64> },
    #[error("singular point: {0}")]
    Singularity(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("construction violates {0}")]
    Construction(String),
    #[error("packing failed: placed {placed} of {wanted} centers")]
    Packing { placed: usize, wanted: usize },
    #[error("budget exceeded: projected {projected:.3e} cubes (count bound {bound:.3e}), budget {budget:.3e}")]
    Budget { projected: f64, bound: f64, budget: f64 },
    #[error("divergence in sample {sample} at step {step}")]
    Divergence { sample: usize, step: usize },
    #[error("importance weights degenerate: effective sample size {ess:.1}")]
    Degeneracy { ess: f64 },
    #[error("quadrature box too small: mass defect {defect:.3e}")]
    GridTooSmall { defect: f64 },
    #[error("histogram range misses {outside:.3} of the mass")]
    Range { outside: f64 },
    #[error("invalid spec at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NlcsError>;

impl NlcsError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        NlcsError::Domain(msg.into())
    }

    /// Process exit code for the command-line contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            NlcsError::Divergence { .. } => 3,
            NlcsError::Budget { .. } => 4,
            _ => 2,
        }
    }
}
