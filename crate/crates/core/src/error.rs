use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigenvalue {index} did not converge within {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    #[error("truncation cap {cap} exceeded before levels up to eps = {eps_max} converged")]
    TruncationCapExceeded { cap: usize, eps_max: f64 },

    #[error("spectrum carries no eigenvectors")]
    MissingEigenvectors,

    #[error("no classically allowed orbit at eps = {eps} (ground energy {eps_gs})")]
    NoAllowedOrbit { eps: f64, eps_gs: f64 },

    #[error("density of states diverges at eps = {eps} (critical energy, g = {g})")]
    Divergent { eps: f64, g: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error}")]
    QuadratureFailed { estimate: f64, error: f64 },

    #[error("fit needs at least {needed} points in window, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("window of {window} levels exceeds the {available} converged levels")]
    WindowTooLarge { window: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
