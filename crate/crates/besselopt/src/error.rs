use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failed to converge: requested {requested:.3e}, achieved {achieved:.3e}")]
    QuadratureNonConvergence { requested: f64, achieved: f64 },

    #[error("no sign change found for {context} on [{lo:.6e}, {hi:.6e}]")]
    BracketFailure { context: String, lo: f64, hi: f64 },

    #[error("multiple sign changes in {context}: numerics violate uniqueness")]
    MultipleRoots { context: String },

    #[error("root finder did not converge after {iters} iterations")]
    RootNonConvergence { iters: usize },

    #[error("inverse iteration did not converge after {iters} iterations")]
    EigenNonConvergence { iters: usize },

    #[error("instability detected: {0}")]
    Instability(String),

    #[error("empty tail bin at eps={eps:.3e}; try eps in [{suggest_lo:.3e}, {suggest_hi:.3e}]")]
    EmptyBin {
        eps: f64,
        suggest_lo: f64,
        suggest_hi: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
