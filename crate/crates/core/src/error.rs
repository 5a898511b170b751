use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or argument lies outside its admissible domain.
    #[error("`{param}` = {value} is out of domain: {reason}")]
    Domain {
        param: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Malformed model configuration record.
    #[error("invalid model configuration: {0}")]
    Config(String),

    /// An iterative numerical procedure ran out of budget before reaching
    /// its tolerance. Carries the best available estimate.
    #[error("{what} did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    NonConvergence {
        what: &'static str,
        estimate: f64,
        error_bound: f64,
    },

    /// Two quantities that must agree by construction do not; signals a bug
    /// in an evaluator rather than bad input.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    /// The Gaussian law at some point is degenerate (non-positive variance).
    #[error("degenerate distribution: variance {variance:e} at t = {t}")]
    Degenerate { variance: f64, t: f64 },

    /// The spectral density fails integrability or the positive lower bound.
    #[error("model `{model}` violates the spectral hypotheses: gamma = {gamma:e}, l1 norm = {l1_norm:e}")]
    HypothesesViolated {
        model: String,
        gamma: f64,
        l1_norm: f64,
    },

    /// The coefficient covariance matrix is not positive definite.
    #[error(
        "covariance matrix of model `{model}` is not positive definite (pivot {pivot} = {value:e})"
    )]
    NotPositiveDefinite {
        model: String,
        pivot: usize,
        value: f64,
    },

    /// Circulant embedding produced a significantly negative eigenvalue.
    #[error("circulant embedding of size {size} has eigenvalue {min_eigenvalue:e}")]
    Embedding { size: usize, min_eigenvalue: f64 },
}
