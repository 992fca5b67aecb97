use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not a valid covariance matrix: {0}")]
    InvalidCovariance(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("steered-block inversion is ill-conditioned: condition number {kappa:.3e} > 1e12")]
    IllConditioned { kappa: f64 },

    #[error("quadrature did not converge within the evaluation budget: last estimates {previous:.12e} and {last:.12e} (|delta| {delta:.3e} > tol {tol:.3e})")]
    NonConvergence {
        previous: f64,
        last: f64,
        delta: f64,
        tol: f64,
    },

    #[error("Fock cutoff {cutoff} insufficient: truncation defect {defect:.3e} exceeds budget {budget:.3e}")]
    CutoffInsufficient {
        cutoff: usize,
        defect: f64,
        budget: f64,
    },

    #[error("subtraction scheme {scheme} is undefined here: mode {mode} carries no photons")]
    EmptySubtraction { scheme: String, mode: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
