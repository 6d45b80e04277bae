//! Out-of-sample evaluation of fixed weight vectors and side-by-side comparison.

use std::io::Write;

use chrono::NaiveDate;
use serde_json::{json, Map, Value};

use crate::eigenportfolio::{
    portfolio_return_series, Normalization, PerformanceMetrics, PortfolioWeights, Provenance, SharpeConfig,
};
use crate::error::{Error, Result};
use crate::market_data::ReturnTable;

/// `1/N` in every asset.
pub fn equal_weight_benchmark(tickers: &[String]) -> Result<PortfolioWeights> {
    if tickers.is_empty() {
        return Err(Error::NoTickers);
    }
    let w = 1.0 / tickers.len() as f64;
    PortfolioWeights::new(
        vec![w; tickers.len()],
        tickers.to_vec(),
        Normalization::SignedSumOne,
        Provenance::EqualWeight,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub label: String,
    pub weights: PortfolioWeights,
    pub metrics: PerformanceMetrics,
    pub dates: Vec<NaiveDate>,
    pub daily_returns: Vec<f64>,
    /// `∏_{s≤t}(1 + r_s) - 1`.
    pub cumulative: Vec<f64>,
}

impl BacktestReport {
    pub fn period(&self) -> (NaiveDate, NaiveDate) {
        (
            self.dates[0],
            *self.dates.last().expect("reports have at least two rows"),
        )
    }

    pub fn sharpe_undefined(&self) -> bool {
        self.metrics.sharpe.is_none()
    }

    pub fn to_json(&self) -> Value {
        let (start, end) = self.period();
        let weights: Map<String, Value> = self
            .weights
            .tickers()
            .iter()
            .zip(self.weights.weights())
            .map(|(t, w)| (t.clone(), json!(w)))
            .collect();
        let dated = |values: &[f64]| -> Vec<Value> {
            self.dates
                .iter()
                .zip(values)
                .map(|(d, v)| json!({ "date": d.to_string(), "value": v }))
                .collect()
        };
        json!({
            "label": self.label,
            "period": { "start": start.to_string(), "end": end.to_string() },
            "weights": weights,
            "metrics": {
                "annualized_return": self.metrics.annualized_return,
                "annualized_volatility": self.metrics.annualized_volatility,
                "sharpe": self.metrics.sharpe,
                "total_loss_flag": self.metrics.total_loss_flag,
            },
            "cumulative": dated(&self.cumulative),
            "daily_returns": dated(&self.daily_returns),
        })
    }
}

/// Compounds a daily series into a cumulative-return path.
pub fn cumulative_path(series: &[f64]) -> Vec<f64> {
    let mut growth = 1.0;
    series
        .iter()
        .map(|r| {
            growth *= 1.0 + r;
            growth - 1.0
        })
        .collect()
}

/// Applies `w` unchanged to every row of `test`.
pub fn run_backtest(
    w: &PortfolioWeights,
    test: &ReturnTable,
    label: &str,
    config: &SharpeConfig,
) -> Result<BacktestReport> {
    if test.n_rows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: test.n_rows(),
        });
    }
    let daily_returns = portfolio_return_series(w, test)?;
    let metrics = PerformanceMetrics::evaluate(&daily_returns, config)?;
    Ok(BacktestReport {
        label: label.to_string(),
        weights: w.clone(),
        metrics,
        dates: test.dates().to_vec(),
        cumulative: cumulative_path(&daily_returns),
        daily_returns,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub annualized_return: f64,
    pub annualized_volatility: f64,
    pub sharpe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Human-readable table: returns and volatility as percentages, Sharpe to two decimals.
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(14);
        let mut out = format!(
            "{:<width$}  {:>17}  {:>21}  {:>12}\n",
            "Portfolio Type", "Annualized Return", "Annualized Volatility", "Sharpe Ratio"
        );
        for row in &self.rows {
            let sharpe = row.sharpe.map_or_else(|| "n/a".to_string(), |s| format!("{s:.2}"));
            out.push_str(&format!(
                "{:<width$}  {:>17}  {:>21}  {:>12}\n",
                row.label,
                format!("{:.2}%", row.annualized_return * 100.0),
                format!("{:.2}%", row.annualized_volatility * 100.0),
                sharpe
            ));
        }
        out
    }

    /// `label,annualized_return,annualized_volatility,sharpe` with fractions, not percentages.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["label", "annualized_return", "annualized_volatility", "sharpe"])?;
        for row in &self.rows {
            out.write_record([
                row.label.clone(),
                crate::fmt_decimal(row.annualized_return),
                crate::fmt_decimal(row.annualized_volatility),
                row.sharpe.map(crate::fmt_decimal).unwrap_or_default(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Tabulates reports in input order. All reports must cover the same dates.
pub fn compare(reports: &[BacktestReport]) -> Result<ComparisonTable> {
    if reports.len() < 2 {
        return Err(Error::TooFewReports {
            needed: 2,
            got: reports.len(),
        });
    }
    let dates = &reports[0].dates;
    if reports.iter().any(|r| &r.dates != dates) {
        return Err(Error::PeriodMismatch);
    }
    Ok(ComparisonTable {
        rows: reports
            .iter()
            .map(|r| ComparisonRow {
                label: r.label.clone(),
                annualized_return: r.metrics.annualized_return,
                annualized_volatility: r.metrics.annualized_volatility,
                sharpe: r.metrics.sharpe,
            })
            .collect(),
    })
}

/// Writes `date,<label>...` with one cumulative-return column per report.
pub fn write_cumulative_csv<W: Write>(reports: &[BacktestReport], writer: W) -> Result<()> {
    let Some(first) = reports.first() else {
        return Err(Error::TooFewReports { needed: 1, got: 0 });
    };
    if reports.iter().any(|r| r.dates != first.dates) {
        return Err(Error::PeriodMismatch);
    }
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(reports.iter().map(|r| r.label.clone()));
    out.write_record(&header)?;
    for (t, date) in first.dates.iter().enumerate() {
        let mut record = vec![date.to_string()];
        record.extend(reports.iter().map(|r| crate::fmt_decimal(r.cumulative[t])));
        out.write_record(&record)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
