//! Testing for independence between two functional time series.
//!
//! The crate computes the portmanteau statistic built from integrated
//! squared cross-covariance surfaces at lags `−H..=H`, estimates its
//! centering and scale with kernel estimators, and reports the normalized
//! statistic with a one-sided normal p-value. It also ships the Brownian
//! and FAR(1) simulation designs used to study the test's size, and a
//! pipeline that turns intraday prices into cumulative intraday return
//! curves and tests every pair of tickers.

pub mod covariance;
pub mod error;
pub mod functional;
pub mod ingestion;
pub mod simulation;
pub mod statistic;

pub use error::{FtsError, FtsResult};
pub use functional::{center, gram_matrix, inner_product, make_uniform_grid, FunctionalSample, Grid, GramMatrix};
pub use statistic::{
    compute_t_stat, estimate_mu, estimate_sigma2, estimate_tau, independence_test, KernelFamily,
    KernelSpec, PairEstimator, TestConfig, TestResult,
};
