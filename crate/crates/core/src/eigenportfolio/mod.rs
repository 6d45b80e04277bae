//! Eigen-portfolios: eigenvectors rescaled into weight vectors, scored by their
//! in-sample Sharpe ratio, and combined into a Sharpe-weighted ensemble.

mod ensemble;
pub mod metrics;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

pub use ensemble::{ensemble_weights, sweep_ensemble_size, EnsembleSpec, EnsembleSweep};
pub use metrics::{
    annualized_return, annualized_volatility, sharpe_from_annualized, sharpe_ratio, PerformanceMetrics, SharpeConfig,
    TRADING_DAYS_PER_YEAR,
};

use crate::eigen::EigenDecomposition;
use crate::error::{Error, Result};
use crate::market_data::ReturnTable;

/// Signed eigenvector sums at or below this magnitude cannot be normalized.
pub const DEGENERATE_SUM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Weights sum to one; leverage is unconstrained.
    #[default]
    SignedSumOne,
    /// Absolute weights sum to one.
    AbsSumOne,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signed" | "signed-sum-one" => Ok(Self::SignedSumOne),
            "abs" | "abs-sum-one" => Ok(Self::AbsSumOne),
            other => Err(Error::Config(format!("unknown normalization {other:?}"))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SignedSumOne => f.write_str("signed"),
            Self::AbsSumOne => f.write_str("abs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Eigen(usize),
    Ensemble(Vec<usize>),
    EqualWeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioWeights {
    weights: Vec<f64>,
    tickers: Vec<String>,
    normalization: Normalization,
    provenance: Provenance,
}

impl PortfolioWeights {
    /// Checks lengths, finiteness and the normalization invariant (`1e-10`).
    pub fn new(
        weights: Vec<f64>,
        tickers: Vec<String>,
        normalization: Normalization,
        provenance: Provenance,
    ) -> Result<Self> {
        if tickers.is_empty() {
            return Err(Error::NoTickers);
        }
        if weights.len() != tickers.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} tickers",
                weights.len(),
                tickers.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite weight".into()));
        }
        let total = match normalization {
            Normalization::SignedSumOne => weights.iter().sum::<f64>(),
            Normalization::AbsSumOne => weights.iter().map(|w| w.abs()).sum::<f64>(),
        };
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::DimensionMismatch(format!(
                "weights sum to {total} under {normalization} normalization"
            )));
        }
        Ok(Self {
            weights,
            tickers,
            normalization,
            provenance,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Sum of absolute weights.
    pub fn gross_exposure(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

/// Rescales eigenvector `q` of component `component` into portfolio weights.
///
/// Signed mode divides by `Σ q_j` and fails when that sum is within
/// [`DEGENERATE_SUM`] of zero; abs mode divides by `Σ |q_j|`.
pub fn normalize_eigenvector(
    q: &[f64],
    tickers: &[String],
    component: usize,
    mode: Normalization,
) -> Result<PortfolioWeights> {
    let denominator = match mode {
        Normalization::SignedSumOne => q.iter().sum::<f64>(),
        Normalization::AbsSumOne => q.iter().map(|x| x.abs()).sum::<f64>(),
    };
    let degenerate = match mode {
        Normalization::SignedSumOne => denominator.abs() <= DEGENERATE_SUM,
        Normalization::AbsSumOne => denominator <= 0.0,
    };
    if degenerate || !denominator.is_finite() {
        return Err(Error::DegenerateNormalization { component, denominator });
    }
    PortfolioWeights::new(
        q.iter().map(|x| x / denominator).collect(),
        tickers.to_vec(),
        mode,
        Provenance::Eigen(component),
    )
}

/// Weights of eigen-portfolio `component` of a decomposition.
pub fn eigen_portfolio(decomp: &EigenDecomposition, component: usize, mode: Normalization) -> Result<PortfolioWeights> {
    if component >= decomp.dim() {
        return Err(Error::ComponentOutOfRange {
            k: component,
            n: decomp.dim(),
        });
    }
    normalize_eigenvector(&decomp.eigenvector(component), decomp.tickers(), component, mode)
}

/// Variance of the standardized-return projection onto the signed-sum-one weights
/// of `component`: `λ_i / (Σ_j q_ij)^2`. The unit-norm eigenvector itself has
/// variance `λ_i`.
pub fn normalized_portfolio_variance(decomp: &EigenDecomposition, component: usize) -> Result<f64> {
    let q = decomp.eigenvector(component);
    let sum: f64 = q.iter().sum();
    if sum.abs() <= DEGENERATE_SUM {
        return Err(Error::DegenerateNormalization {
            component,
            denominator: sum,
        });
    }
    Ok(decomp.eigenvalues()[component] / (sum * sum))
}

/// Daily returns of a constant-weight, daily-rebalanced portfolio.
pub fn portfolio_return_series(w: &PortfolioWeights, returns: &ReturnTable) -> Result<Vec<f64>> {
    if w.tickers() != returns.tickers() {
        return Err(Error::TickerMismatch);
    }
    let r = returns.returns();
    Ok((0..r.nrows())
        .map(|t| {
            w.weights()
                .iter()
                .enumerate()
                .fold(0.0, |acc, (j, wj)| acc + wj * r[(t, j)])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub component: usize,
    pub weights: PortfolioWeights,
    pub metrics: PerformanceMetrics,
}

impl RankedEntry {
    pub fn sharpe(&self) -> f64 {
        self.metrics
            .sharpe
            .expect("ranked entries always have a defined Sharpe")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    DegenerateNormalization,
    ZeroVolatility,
    /// Leverage so extreme that compounded growth is not representable.
    NonFinite,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DegenerateNormalization => f.write_str("degenerate normalization"),
            Self::ZeroVolatility => f.write_str("zero volatility"),
            Self::NonFinite => f.write_str("non-finite metrics"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedComponents {
    /// Sorted by Sharpe descending, ties by lower component index.
    pub entries: Vec<RankedEntry>,
    /// Components excluded from the ranking, in index order.
    pub skipped: Vec<(usize, SkipReason)>,
}

impl RankedComponents {
    pub fn top(&self) -> &RankedEntry {
        &self.entries[0]
    }

    pub fn positive_count(&self) -> usize {
        self.entries.iter().take_while(|e| e.sharpe() > 0.0).count()
    }

    /// Ranked rows first, then excluded components with empty metric cells.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "component",
            "annualized_return",
            "annualized_volatility",
            "sharpe",
            "excluded",
        ])?;
        for e in &self.entries {
            out.write_record([
                e.component.to_string(),
                crate::fmt_decimal(e.metrics.annualized_return),
                crate::fmt_decimal(e.metrics.annualized_volatility),
                crate::fmt_decimal(e.sharpe()),
                "false".to_string(),
            ])?;
        }
        for (component, _) in &self.skipped {
            out.write_record([
                component.to_string(),
                String::new(),
                String::new(),
                String::new(),
                "true".into(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Scores every eigen-portfolio on the training returns and sorts them by Sharpe.
pub fn rank_components(
    decomp: &EigenDecomposition,
    train: &ReturnTable,
    mode: Normalization,
    config: &SharpeConfig,
) -> Result<RankedComponents> {
    if decomp.tickers() != train.tickers() {
        return Err(Error::TickerMismatch);
    }
    if train.n_rows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: train.n_rows(),
        });
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for component in 0..decomp.dim() {
        let weights = match eigen_portfolio(decomp, component, mode) {
            Ok(w) => w,
            Err(Error::DegenerateNormalization { .. }) => {
                skipped.push((component, SkipReason::DegenerateNormalization));
                continue;
            }
            Err(e) => return Err(e),
        };
        let series = portfolio_return_series(&weights, train)?;
        let metrics = PerformanceMetrics::evaluate(&series, config)?;
        match metrics.sharpe {
            None => {
                skipped.push((component, SkipReason::ZeroVolatility));
                continue;
            }
            Some(s) if !s.is_finite() || !metrics.annualized_return.is_finite() => {
                skipped.push((component, SkipReason::NonFinite));
                continue;
            }
            Some(_) => {}
        }
        entries.push(RankedEntry {
            component,
            weights,
            metrics,
        });
    }
    if entries.is_empty() {
        return Err(Error::AllComponentsExcluded);
    }
    entries.sort_by(|a, b| b.sharpe().total_cmp(&a.sharpe()));
    Ok(RankedComponents { entries, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopPositions {
    /// Largest positive weights, descending.
    pub longs: Vec<(String, f64)>,
    /// Most negative weights first.
    pub shorts: Vec<(String, f64)>,
}

pub fn top_positions(w: &PortfolioWeights, k: usize) -> TopPositions {
    let pairs = || w.tickers().iter().cloned().zip(w.weights().iter().copied());
    let mut longs: Vec<_> = pairs().filter(|(_, x)| *x > 0.0).collect();
    longs.sort_by(|a, b| b.1.total_cmp(&a.1));
    longs.truncate(k);
    let mut shorts: Vec<_> = pairs().filter(|(_, x)| *x < 0.0).collect();
    shorts.sort_by(|a, b| a.1.total_cmp(&b.1));
    shorts.truncate(k);
    TopPositions { longs, shorts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use nalgebra::DMatrix;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i}")).collect()
    }

    fn table(rows: &[&[f64]]) -> ReturnTable {
        let start = NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
        let dates = (0..rows.len()).map(|t| start + chrono::Days::new(t as u64)).collect();
        let n = rows[0].len();
        ReturnTable::new(dates, names(n), DMatrix::from_fn(rows.len(), n, |t, j| rows[t][j])).unwrap()
    }

    #[test]
    fn normalization_examples() {
        let t = names(2);
        let w = normalize_eigenvector(&[0.5, 0.5], &t, 0, Normalization::SignedSumOne).unwrap();
        assert_eq!(w.weights(), &[0.5, 0.5]);
        let w = normalize_eigenvector(&[3.0, -1.0], &t, 0, Normalization::SignedSumOne).unwrap();
        assert_eq!(w.weights(), &[1.5, -0.5]);
        let w = normalize_eigenvector(&[3.0, -1.0], &t, 0, Normalization::AbsSumOne).unwrap();
        assert_eq!(w.weights(), &[0.75, -0.25]);
        assert_eq!(w.provenance(), &Provenance::Eigen(0));
    }

    #[test]
    fn degenerate_normalization_names_component() {
        let err = normalize_eigenvector(&[0.5, -0.5], &names(2), 7, Normalization::SignedSumOne).unwrap_err();
        assert!(err.to_string().contains("degenerate normalization"));
        assert!(err.to_string().contains('7'));
        assert!(normalize_eigenvector(&[0.0, 0.0], &names(2), 0, Normalization::AbsSumOne).is_err());
    }

    #[test]
    fn return_series_examples() {
        let r = table(&[&[0.02, 0.02], &[0.0, 0.0], &[-0.01, -0.01]]);
        let eq = PortfolioWeights::new(
            vec![0.5, 0.5],
            names(2),
            Normalization::SignedSumOne,
            Provenance::EqualWeight,
        )
        .unwrap();
        assert_eq!(portfolio_return_series(&eq, &r).unwrap(), r.column(0));

        let r = table(&[&[0.02, 0.0, 0.3], &[0.0, 0.02, -0.1]]);
        let single = PortfolioWeights::new(
            vec![1.0, 0.0, 0.0],
            names(3),
            Normalization::SignedSumOne,
            Provenance::Eigen(0),
        )
        .unwrap();
        assert_eq!(portfolio_return_series(&single, &r).unwrap(), r.column(0));

        let r = table(&[&[0.02, 0.0], &[0.0, 0.02]]);
        assert_eq!(portfolio_return_series(&eq, &r).unwrap(), vec![0.01, 0.01]);
    }

    #[test]
    fn return_series_rejects_mismatched_tickers() {
        let r = table(&[&[0.02, 0.0], &[0.0, 0.02]]);
        let w = PortfolioWeights::new(
            vec![1.0, 0.0],
            vec!["X".into(), "Y".into()],
            Normalization::SignedSumOne,
            Provenance::EqualWeight,
        )
        .unwrap();
        assert!(matches!(portfolio_return_series(&w, &r), Err(Error::TickerMismatch)));
    }

    #[test]
    fn weights_validate_invariants() {
        assert!(PortfolioWeights::new(
            vec![0.5, 0.4],
            names(2),
            Normalization::SignedSumOne,
            Provenance::EqualWeight
        )
        .is_err());
        assert!(PortfolioWeights::new(
            vec![2.0, -1.0],
            names(2),
            Normalization::SignedSumOne,
            Provenance::EqualWeight
        )
        .is_ok());
        assert!(PortfolioWeights::new(
            vec![2.0, -1.0],
            names(2),
            Normalization::AbsSumOne,
            Provenance::EqualWeight
        )
        .is_err());
        assert!(PortfolioWeights::new(
            vec![1.0],
            names(2),
            Normalization::SignedSumOne,
            Provenance::EqualWeight
        )
        .is_err());
    }

    #[test]
    fn top_positions_ordering() {
        let raw = [0.6, 0.5, -1.1, 1.0];
        let total: f64 = raw.iter().sum();
        let w = PortfolioWeights::new(
            raw.iter().map(|x| x / total).collect(),
            names(4),
            Normalization::SignedSumOne,
            Provenance::Eigen(0),
        )
        .unwrap();
        let top = top_positions(&w, 2);
        assert_eq!(top.longs.iter().map(|p| p.0.as_str()).collect::<Vec<_>>(), ["S3", "S0"]);
        assert_eq!(top.shorts.len(), 1);
        assert_eq!(top.shorts[0].0, "S2");

        let all_long = PortfolioWeights::new(
            vec![0.2; 5],
            names(5),
            Normalization::SignedSumOne,
            Provenance::EqualWeight,
        )
        .unwrap();
        let top = top_positions(&all_long, 5);
        assert_eq!(top.longs.len(), 5);
        assert!(top.shorts.is_empty());
    }

    #[test]
    fn ranking_skips_degenerate_components() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // q0 = (1, 1)/√2 is tradable, q1 = (1, -1)/√2 sums to zero
        let q = DMatrix::from_row_slice(2, 2, &[h, h, h, -h]);
        let d = EigenDecomposition::from_parts(vec![1.5, 0.5], q, names(2)).unwrap();
        let r = table(&[&[0.01, 0.02], &[0.0, 0.01], &[0.02, -0.01], &[0.005, 0.0]]);
        let ranked = rank_components(&d, &r, Normalization::SignedSumOne, &SharpeConfig::default()).unwrap();
        assert_eq!(ranked.entries.len(), 1);
        assert_eq!(ranked.top().component, 0);
        assert_eq!(ranked.skipped, vec![(1, SkipReason::DegenerateNormalization)]);
    }

    #[test]
    fn ranking_fails_when_everything_is_excluded() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // both columns have zero sum after the sign rule
        let q = DMatrix::from_row_slice(
            4,
            4,
            &[
                h, 0.0, 0.5, 0.5, -h, 0.0, 0.5, 0.5, 0.0, h, -0.5, 0.5, 0.0, -h, -0.5, 0.5,
            ],
        );
        let d = EigenDecomposition::from_parts(vec![1.0; 4], q, names(4)).unwrap();
        let r = table(&[
            &[0.01, 0.01, 0.01, 0.01],
            &[0.01, 0.01, 0.01, 0.01],
            &[0.01, 0.01, 0.01, 0.01],
        ]);
        // q3 is tradable but flat returns give zero volatility; the rest are degenerate
        let err = rank_components(&d, &r, Normalization::SignedSumOne, &SharpeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::AllComponentsExcluded));
    }

    #[test]
    fn normalized_variance_rescales_eigenvalue() {
        let q = DMatrix::from_row_slice(2, 2, &[0.8, -0.6, 0.6, 0.8]);
        let d = EigenDecomposition::from_parts(vec![1.4, 0.6], q, names(2)).unwrap();
        let v = normalized_portfolio_variance(&d, 0).unwrap();
        assert!((v - 1.4 / (1.4 * 1.4)).abs() < 1e-15);
    }
}
