//! Sharpe-weighted combination of the top-ranked eigen-portfolios.

use super::{
    portfolio_return_series, Normalization, PerformanceMetrics, PortfolioWeights, Provenance, RankedComponents,
    SharpeConfig,
};
use crate::error::{Error, Result};
use crate::market_data::ReturnTable;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n: usize,
    /// `S_i / Σ S_j` over the members, in ranking order.
    pub coefficients: Vec<f64>,
    pub member_indices: Vec<usize>,
    pub combined: PortfolioWeights,
}

/// Combines the top `n` ranked portfolios with coefficients proportional to
/// their Sharpe ratios. Every member must have a strictly positive Sharpe.
///
/// With signed-sum-one members the combination sums to one. Abs-sum-one members
/// are combined the same way and the result is rescaled to unit gross exposure.
pub fn ensemble_weights(ranked: &RankedComponents, n: usize) -> Result<EnsembleSpec> {
    let available = ranked.entries.len();
    if n == 0 || n > available {
        return Err(Error::InvalidEnsembleSize { n, available });
    }
    let members = &ranked.entries[..n];
    if let Some(bad) = members.iter().find(|e| e.sharpe() <= 0.0) {
        return Err(Error::NonPositiveSharpe {
            component: bad.component,
            sharpe: bad.sharpe(),
        });
    }

    let total: f64 = members.iter().map(|e| e.sharpe()).sum();
    let coefficients: Vec<f64> = members.iter().map(|e| e.sharpe() / total).collect();

    let first = &members[0].weights;
    let mut combined = vec![0.0; first.weights().len()];
    for (alpha, entry) in coefficients.iter().zip(members) {
        for (c, w) in combined.iter_mut().zip(entry.weights.weights()) {
            *c += alpha * w;
        }
    }
    let mode = first.normalization();
    if mode == Normalization::AbsSumOne {
        let gross: f64 = combined.iter().map(|c| c.abs()).sum();
        combined.iter_mut().for_each(|c| *c /= gross);
    }

    let member_indices: Vec<usize> = members.iter().map(|e| e.component).collect();
    let combined = PortfolioWeights::new(
        combined,
        first.tickers().to_vec(),
        mode,
        Provenance::Ensemble(member_indices.clone()),
    )?;
    Ok(EnsembleSpec {
        n,
        coefficients,
        member_indices,
        combined,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSweep {
    pub best_n: usize,
    /// `(n, in-sample Sharpe)` for `n = 1..=n_max`.
    pub curve: Vec<(usize, f64)>,
}

/// Evaluates the ensemble Sharpe ratio on `train` for every size up to `n_max`
/// and picks the best, preferring the smaller size on ties.
pub fn sweep_ensemble_size(
    ranked: &RankedComponents,
    train: &ReturnTable,
    n_max: usize,
    config: &SharpeConfig,
) -> Result<EnsembleSweep> {
    let positive = ranked.positive_count();
    if positive == 0 {
        return Err(Error::NoPositiveSharpe);
    }
    if n_max == 0 || n_max > positive {
        return Err(Error::InvalidEnsembleSize {
            n: n_max,
            available: positive,
        });
    }
    let mut curve = Vec::with_capacity(n_max);
    let mut best: Option<(usize, f64)> = None;
    for n in 1..=n_max {
        let spec = ensemble_weights(ranked, n)?;
        let series = portfolio_return_series(&spec.combined, train)?;
        let sharpe = PerformanceMetrics::evaluate(&series, config)?
            .sharpe
            .ok_or(Error::UndefinedSharpe)?;
        curve.push((n, sharpe));
        if best.is_none_or(|(_, s)| sharpe > s) {
            best = Some((n, sharpe));
        }
    }
    let (best_n, _) = best.expect("n_max >= 1");
    Ok(EnsembleSweep { best_n, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenportfolio::{PerformanceMetrics, RankedEntry};

    fn entry(component: usize, sharpe: f64, weights: Vec<f64>) -> RankedEntry {
        let n = weights.len();
        RankedEntry {
            component,
            weights: PortfolioWeights::new(
                weights,
                (0..n).map(|i| format!("S{i}")).collect(),
                Normalization::SignedSumOne,
                Provenance::Eigen(component),
            )
            .unwrap(),
            metrics: PerformanceMetrics {
                annualized_return: sharpe * 0.2,
                annualized_volatility: 0.2,
                sharpe: Some(sharpe),
                total_loss_flag: false,
            },
        }
    }

    fn ranked(sharpes: &[f64]) -> RankedComponents {
        RankedComponents {
            entries: sharpes
                .iter()
                .enumerate()
                .map(|(i, s)| entry(i, *s, vec![1.0 + i as f64, -(i as f64), 0.0]))
                .collect(),
            skipped: vec![],
        }
    }

    #[test]
    fn singleton_ensemble_is_the_top_component() {
        let r = ranked(&[1.2, 0.4]);
        let spec = ensemble_weights(&r, 1).unwrap();
        assert_eq!(spec.coefficients, vec![1.0]);
        assert_eq!(spec.combined.weights(), r.entries[0].weights.weights());
        assert_eq!(spec.member_indices, vec![0]);
    }

    #[test]
    fn coefficients_from_reported_sharpes() {
        let r = ranked(&[1.544140, 1.237029, 0.505717, 0.347156]);
        let spec = ensemble_weights(&r, 4).unwrap();
        let expected = [0.42491, 0.34040, 0.13916, 0.09553];
        for (a, e) in spec.coefficients.iter().zip(expected) {
            assert!((a - e).abs() < 1e-4, "{a} vs {e}");
        }
        assert!((spec.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((spec.combined.weights().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert_eq!(spec.combined.provenance(), &Provenance::Ensemble(vec![0, 1, 2, 3]));
    }

    #[test]
    fn rejects_non_positive_members_and_bad_sizes() {
        let r = ranked(&[0.8, 0.0, -0.3]);
        let err = ensemble_weights(&r, 2).unwrap_err();
        assert!(err.to_string().contains("non-positive Sharpe in ensemble"));
        assert!(matches!(
            ensemble_weights(&r, 0),
            Err(Error::InvalidEnsembleSize { .. })
        ));
        assert!(matches!(
            ensemble_weights(&r, 4),
            Err(Error::InvalidEnsembleSize { .. })
        ));
    }
}
