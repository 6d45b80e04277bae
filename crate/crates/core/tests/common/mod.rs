//! Shared fixtures and brute-force oracles for the integration suites.
//!
//! The oracles here are deliberately written from the textbook formulas with
//! plain loops over `Vec`s so they share no code path with the library.

#![allow(dead_code)]

use chrono::NaiveDate;
use eigenfolio::market_data::{PriceTable, ReturnTable};
use eigenfolio::stats::CorrelationMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tickers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("TK{i:02}")).collect()
}

pub fn dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    (0..n).map(|t| start + chrono::Days::new(t as u64)).collect()
}

pub fn return_table(m: DMatrix<f64>) -> ReturnTable {
    ReturnTable::new(dates(m.nrows()), tickers(m.ncols()), m).unwrap()
}

/// Independent normal returns with per-column scale.
pub fn noise_returns(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Returns from a mixing of independent normals, giving a random correlation structure.
pub fn correlated_returns(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let z = noise_returns(rng, rows, cols, 0.01);
    let mix = DMatrix::from_fn(cols, cols, |i, j| {
        if i == j {
            1.0
        } else {
            0.4 * rng.sample::<f64, _>(StandardNormal)
        }
    });
    z * mix
}

/// One-factor panel: `r[t][i] = β_i f_t + ε[t][i]` with all `β_i > 0` and
/// `Var(ε_i) = noise_ratio · Var(β_i f)`.
pub fn one_factor_returns(
    rng: &mut impl Rng,
    rows: usize,
    cols: usize,
    factor_mean: f64,
    factor_sd: f64,
    noise_ratio: f64,
) -> DMatrix<f64> {
    let loadings: Vec<f64> = (0..cols).map(|_| rng.random_range(0.5..1.5)).collect();
    let factor = Normal::new(factor_mean, factor_sd).unwrap();
    let f: Vec<f64> = (0..rows).map(|_| factor.sample(rng)).collect();
    DMatrix::from_fn(rows, cols, |t, i| {
        let idio_sd = (noise_ratio).sqrt() * loadings[i] * factor_sd;
        loadings[i] * f[t] + idio_sd * rng.sample::<f64, _>(StandardNormal)
    })
}

pub fn prices_from_returns(returns: &DMatrix<f64>, start: f64) -> PriceTable {
    let rows = returns.nrows() + 1;
    let cols = returns.ncols();
    let mut p = DMatrix::from_element(rows, cols, start);
    for t in 1..rows {
        for i in 0..cols {
            p[(t, i)] = p[(t - 1, i)] * (1.0 + returns[(t - 1, i)]);
        }
    }
    PriceTable::new(dates(rows), tickers(cols), p).unwrap()
}

pub fn write_price_csv(path: &std::path::Path, table: &PriceTable) {
    let file = std::fs::File::create(path).unwrap();
    table.write_csv(file).unwrap();
}

/// Random `n x n` correlation matrix: a normalized Gram matrix of random vectors
/// sharing a common component.
pub fn random_correlation(rng: &mut impl Rng, n: usize) -> CorrelationMatrix {
    let k = n + 5;
    let common: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let strength: f64 = rng.random_range(0.0..1.5);
    let a = DMatrix::from_fn(n, k, |_, j| strength * common[j] + rng.sample::<f64, _>(StandardNormal));
    let gram = &a * a.transpose();
    let mut c = DMatrix::from_fn(n, n, |i, j| gram[(i, j)] / (gram[(i, i)] * gram[(j, j)]).sqrt());
    for i in 0..n {
        c[(i, i)] = 1.0;
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    CorrelationMatrix::new(c, tickers(n)).unwrap()
}

pub fn column(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|t| m[(t, j)]).collect()
}

pub fn oracle_mean(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    s / xs.len() as f64
}

/// Two-pass sample standard deviation.
pub fn oracle_std(xs: &[f64]) -> f64 {
    let mean = oracle_mean(xs);
    let mut ss = 0.0;
    for x in xs {
        ss += (x - mean) * (x - mean);
    }
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

pub fn oracle_annualized_return(xs: &[f64], ppy: f64) -> f64 {
    let mut g = 1.0;
    for x in xs {
        g *= 1.0 + x;
    }
    if g <= 1e-12 {
        -1.0
    } else {
        g.powf(ppy / xs.len() as f64) - 1.0
    }
}

pub fn oracle_annualized_volatility(xs: &[f64], ppy: f64) -> f64 {
    oracle_std(xs) * ppy.sqrt()
}

pub fn oracle_sharpe(xs: &[f64], ppy: f64) -> f64 {
    oracle_annualized_return(xs, ppy) / oracle_annualized_volatility(xs, ppy)
}

pub fn oracle_portfolio_series(weights: &[f64], returns: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.nrows());
    for t in 0..returns.nrows() {
        let mut s = 0.0;
        for (j, w) in weights.iter().enumerate() {
            s += w * returns[(t, j)];
        }
        out.push(s);
    }
    out
}

/// Pearson correlation of two columns.
pub fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (oracle_mean(a), oracle_mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}
