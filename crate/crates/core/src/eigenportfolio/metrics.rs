//! Annualized return, volatility and Sharpe ratio of a daily return series.

use serde::Serialize;

use crate::error::{Error, Result};

pub const TRADING_DAYS_PER_YEAR: u32 = 252;

/// Compounded growth at or below this is treated as a total loss.
pub const TOTAL_LOSS_GROWTH: f64 = 1e-12;

/// Annualization and risk-free settings shared by every metric computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpeConfig {
    pub periods_per_year: u32,
    /// Constant per-period rate subtracted from every return before compounding.
    pub risk_free_daily: f64,
}

impl Default for SharpeConfig {
    fn default() -> Self {
        Self {
            periods_per_year: TRADING_DAYS_PER_YEAR,
            risk_free_daily: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerformanceMetrics {
    pub annualized_return: f64,
    pub annualized_volatility: f64,
    /// `None` when volatility is zero.
    pub sharpe: Option<f64>,
    pub total_loss_flag: bool,
}

impl PerformanceMetrics {
    /// Computes all metrics for `series` after subtracting the risk-free rate.
    /// Unlike [`sharpe_ratio`], a zero-volatility series is not an error; its
    /// Sharpe ratio is left undefined.
    pub fn evaluate(series: &[f64], config: &SharpeConfig) -> Result<Self> {
        let excess = excess_returns(series, config.risk_free_daily);
        let (annualized_return, total_loss_flag) = annualize_growth(&excess, config.periods_per_year)?;
        let annualized_volatility = annualized_volatility(&excess, config.periods_per_year)?;
        let sharpe = sharpe_from_annualized(annualized_return, annualized_volatility).ok();
        Ok(Self {
            annualized_return,
            annualized_volatility,
            sharpe,
            total_loss_flag,
        })
    }
}

pub fn excess_returns(series: &[f64], risk_free_daily: f64) -> Vec<f64> {
    if risk_free_daily == 0.0 {
        series.to_vec()
    } else {
        series.iter().map(|r| r - risk_free_daily).collect()
    }
}

fn annualize_growth(series: &[f64], periods_per_year: u32) -> Result<(f64, bool)> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let exponent = f64::from(periods_per_year) / series.len() as f64;
    let growth: f64 = series.iter().map(|r| 1.0 + r).product();
    if growth.is_finite() {
        if growth <= TOTAL_LOSS_GROWTH {
            return Ok((-1.0, true));
        }
        return Ok((growth.powf(exponent) - 1.0, false));
    }
    // the direct product overflowed; redo it in log space, tracking the sign
    let negative_factors = series.iter().filter(|r| 1.0 + **r < 0.0).count();
    if negative_factors % 2 == 1 || series.iter().any(|r| 1.0 + r == 0.0) {
        return Ok((-1.0, true));
    }
    let log_growth: f64 = series.iter().map(|r| (1.0 + r).abs().ln()).sum();
    Ok(((exponent * log_growth).exp() - 1.0, false))
}

/// Geometric annualized return `(∏(1 + r))^(P/T) - 1`, or exactly `-1` when
/// the compounded growth is wiped out.
pub fn annualized_return(series: &[f64], periods_per_year: u32) -> Result<f64> {
    annualize_growth(series, periods_per_year).map(|(r, _)| r)
}

/// Sample standard deviation (divisor `T-1`) scaled by `sqrt(P)`.
pub fn annualized_volatility(series: &[f64], periods_per_year: u32) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort(series.len()));
    }
    let first = series[0];
    if series.iter().all(|&r| r == first) {
        return Ok(0.0);
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt() * f64::from(periods_per_year).sqrt())
}

/// Ratio of already-annualized return and volatility.
pub fn sharpe_from_annualized(annualized_return: f64, annualized_volatility: f64) -> Result<f64> {
    if annualized_volatility > 0.0 {
        Ok(annualized_return / annualized_volatility)
    } else {
        Err(Error::UndefinedSharpe)
    }
}

/// Annualized return over annualized volatility with a zero risk-free rate.
pub fn sharpe_ratio(series: &[f64], periods_per_year: u32) -> Result<PerformanceMetrics> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort(series.len()));
    }
    let metrics = PerformanceMetrics::evaluate(
        series,
        &SharpeConfig {
            periods_per_year,
            risk_free_daily: 0.0,
        },
    )?;
    if metrics.sharpe.is_none() {
        return Err(Error::UndefinedSharpe);
    }
    Ok(metrics)
}
