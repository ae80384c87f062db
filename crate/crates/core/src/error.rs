use thiserror::Error;

/// Errors raised by the numerical routines and the model front end.
#[derive(Debug, Error)]
pub enum LrdError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "quadrature did not converge: estimate {estimate:e} with error {error:e} \
         (target {target:e}) after {evaluations} evaluations"
    )]
    Quadrature {
        estimate: f64,
        error: f64,
        target: f64,
        evaluations: usize,
    },

    #[error("Laplace inversion unstable: cached a(t) not positive/nonincreasing at t = {nodes:?}")]
    InversionUnstable { nodes: Vec<f64> },

    #[error(
        "kernel grid covers [{lo:e}, {hi:e}] but {what} = {value:e} was requested; extend the grid"
    )]
    GridCoverage {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("series did not converge after {terms} terms (last term norm {last_term:e})")]
    SeriesNotConverged { terms: usize, last_term: f64 },

    #[error("unsupported nesting depth {depth} (maximum {max})")]
    UnsupportedDepth { depth: usize, max: usize },

    #[error("numerical instability: {0}")]
    Instability(String),

    #[error(
        "covariance factorization failed (jitter {jitter:e}); try a coarser grid or larger jitter"
    )]
    Factorization { jitter: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model document: {0}")]
    Parse(#[from] serde_json::Error),
}

impl LrdError {
    /// Short machine-readable tag used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            LrdError::InvalidModel(_) => "invalid_model",
            LrdError::InvalidArgument(_) => "invalid_argument",
            LrdError::Quadrature { .. } => "quadrature",
            LrdError::InversionUnstable { .. } => "inversion_unstable",
            LrdError::GridCoverage { .. } => "grid_coverage",
            LrdError::SeriesNotConverged { .. } => "series_not_converged",
            LrdError::UnsupportedDepth { .. } => "unsupported_depth",
            LrdError::Instability(_) => "instability",
            LrdError::Factorization { .. } => "factorization",
            LrdError::Io(_) => "io",
            LrdError::Parse(_) => "parse",
        }
    }

    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            LrdError::InvalidModel(_)
                | LrdError::InvalidArgument(_)
                | LrdError::Io(_)
                | LrdError::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, LrdError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LrdError::InvalidArgument(msg.into()))
}
