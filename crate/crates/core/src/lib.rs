//! Eigen-portfolio construction and backtesting.
//!
//! The pipeline runs from a CSV price panel to daily returns, a chronological
//! train/test split, the correlation matrix of standardized training returns,
//! and its eigendecomposition. Each eigenvector becomes a candidate portfolio;
//! candidates are ranked by in-sample Sharpe ratio, the top ones are blended
//! into a Sharpe-weighted ensemble, and the resulting weights are evaluated on
//! the held-out rows against an equal-weight benchmark.

pub mod backtest;
pub mod cli;
pub mod eigen;
pub mod eigenportfolio;
pub mod error;
pub mod market_data;
pub mod stats;

pub use error::{Error, Result};

/// Decimal places used for every numeric CSV cell.
pub const CSV_DECIMALS: usize = 10;

pub(crate) fn fmt_decimal(value: f64) -> String {
    format!("{value:.prec$}", prec = CSV_DECIMALS)
}
