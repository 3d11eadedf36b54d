//! Crate-wide error type.
//!
//! Data-dependent failures (a grid over budget, a solver that stalls, a
//! singular covariance) come back as `Err`. Contract violations that can only
//! arise from caller bugs (empty input to a reduction, NaN fed to a
//! log-domain primitive) panic instead; see the individual function docs.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input collections whose lengths must agree did not.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// A dataset that must be non-empty was empty.
    #[error("empty data: {0}")]
    EmptyData(&'static str),

    /// Requested grid exceeds the configured node budget.
    #[error("grid of {requested} nodes exceeds budget of {budget}")]
    BudgetExceeded { requested: u128, budget: usize },

    /// The integrand returned NaN at a grid node.
    #[error("integrand returned NaN at node {node:?}")]
    NanAtNode { node: Vec<f64> },

    /// Evidence requested for a model whose prior does not normalize.
    #[error("improper prior: {0}")]
    ImproperPrior(String),

    /// A prior construction produced a non-normalizable density.
    #[error("non-normalizable density: {0}")]
    NonNormalizable(String),

    /// Kepler's equation did not reach the residual tolerance.
    #[error(
        "Kepler solver did not converge: M = {mean_anomaly}, e = {eccentricity}, \
         residual {residual:e} after {iterations} iterations"
    )]
    KeplerNoConvergence {
        mean_anomaly: f64,
        eccentricity: f64,
        residual: f64,
        iterations: usize,
    },

    /// Marginal covariance factorization failed.
    #[error("singular marginal covariance: {0}")]
    SingularCovariance(String),

    /// A computation produced a non-finite value where one is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),
}
