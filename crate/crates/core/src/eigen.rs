//! Symmetric eigendecomposition of the correlation matrix, explained-variance
//! accounting, and projection of standardized returns onto the eigenbasis.
//!
//! The solver is a cyclic Jacobi iteration: each sweep visits every
//! off-diagonal pair `(p, q)` in row order and applies the plane rotation that
//! zeroes `a[p][q]`, accumulating the rotations into the eigenvector matrix.
//! It stops once the off-diagonal Frobenius norm drops below
//! [`OFF_DIAGONAL_TOLERANCE`].

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stats::{CorrelationMatrix, StandardizedReturns};

pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;
/// Eigenvalues at or above this bound are clamped to zero; anything lower is an error.
pub const NEGATIVE_EIGENVALUE_FLOOR: f64 = -1e-8;

/// Raw Jacobi output: unsorted eigenvalues and matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct JacobiOutput {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Cyclic Jacobi eigenvalue iteration for a real symmetric matrix.
///
/// Only the lower triangle's mirror is assumed equal to the upper one; the input
/// is not checked for symmetry.
pub fn jacobi_eigen(matrix: &DMatrix<f64>) -> Result<JacobiOutput> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "jacobi needs a square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    let mut a = matrix.clone();
    let mut v = DMatrix::<f64>::identity(n, n);

    let mut sweeps = 0;
    let mut residual = off_diagonal_norm(&a);
    while residual >= OFF_DIAGONAL_TOLERANCE {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        residual = off_diagonal_norm(&a);
    }

    Ok(JacobiOutput {
        eigenvalues: (0..n).map(|i| a[(i, i)]).collect(),
        eigenvectors: v,
        sweeps,
    })
}

/// Applies the rotation in the `(p, q)` plane that annihilates `a[p][q]`.
fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    // smaller root of t^2 + 2*theta*t - 1 = 0
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = a.nrows();
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        a[(r, p)] = new_rp;
        a[(p, r)] = new_rp;
        a[(r, q)] = new_rq;
        a[(q, r)] = new_rq;
    }
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

/// Eigenvalues sorted descending with unit-norm eigenvector columns aligned to them.
///
/// Each column's sign is fixed so its entries sum to a nonnegative number; when
/// the sum is within `1e-12` of zero the largest-magnitude entry is made positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    tickers: Vec<String>,
}

impl EigenDecomposition {
    /// Builds a decomposition from explicit parts, applying the same ordering,
    /// clamping and sign rules as [`eigh`]. `eigenvectors` must have orthonormal columns.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>, tickers: Vec<String>) -> Result<Self> {
        let n = tickers.len();
        if n == 0 {
            return Err(Error::NoTickers);
        }
        if eigenvalues.len() != n || eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues and {}x{} eigenvectors for {n} tickers",
                eigenvalues.len(),
                eigenvectors.nrows(),
                eigenvectors.ncols()
            )));
        }
        let gram = eigenvectors.tr_mul(&eigenvectors);
        if (gram - DMatrix::identity(n, n)).amax() > 1e-10 {
            return Err(Error::DimensionMismatch("eigenvectors are not orthonormal".into()));
        }
        Self::assemble(eigenvalues, eigenvectors, tickers)
    }

    fn assemble(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>, tickers: Vec<String>) -> Result<Self> {
        let n = eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        // stable: equal eigenvalues keep their solver order
        order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));

        let mut values = DVector::zeros(n);
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut lambda = eigenvalues[src];
            if !lambda.is_finite() || lambda < NEGATIVE_EIGENVALUE_FLOOR {
                return Err(Error::NegativeEigenvalue {
                    index: dst,
                    value: lambda,
                });
            }
            if lambda < 0.0 {
                lambda = 0.0;
            }
            values[dst] = lambda;

            let mut col = eigenvectors.column(src).into_owned();
            if needs_flip(col.as_slice()) {
                col.neg_mut();
            }
            vectors.set_column(dst, &col);
        }
        Ok(Self {
            eigenvalues: values,
            eigenvectors: vectors,
            tickers,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Eigenvectors as columns, in the same order as [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dim(&self) -> usize {
        self.tickers.len()
    }

    /// `Q Λ Qᵀ`.
    pub fn reconstruct_matrix(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            self.eigenvectors[(r, c)] * self.eigenvalues[c]
        });
        scaled * self.eigenvectors.transpose()
    }

    /// Share of total variance carried by each component.
    pub fn explained_variance_ratios(&self) -> Vec<f64> {
        let total = total_variance(self.eigenvalues.as_slice());
        self.eigenvalues.iter().map(|l| l / total).collect()
    }

    /// Writes `component,eigenvalue,explained_variance,cumulative_explained_variance`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "component",
            "eigenvalue",
            "explained_variance",
            "cumulative_explained_variance",
        ])?;
        let ratios = self.explained_variance_ratios();
        for (i, (lambda, ratio)) in self.eigenvalues.iter().zip(&ratios).enumerate() {
            let cev = cumulative_explained_variance(self, i + 1)?;
            out.write_record([
                i.to_string(),
                crate::fmt_decimal(*lambda),
                crate::fmt_decimal(*ratio),
                crate::fmt_decimal(cev),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn needs_flip(col: &[f64]) -> bool {
    let sum: f64 = col.iter().sum();
    if sum.abs() > 1e-12 {
        return sum < 0.0;
    }
    let mut largest = 0.0f64;
    for &x in col {
        if x.abs() > largest.abs() {
            largest = x;
        }
    }
    largest < 0.0
}

fn total_variance(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, l| acc + l)
}

/// Decomposes a correlation matrix as `ρ = Q Λ Qᵀ`.
pub fn eigh(rho: &CorrelationMatrix) -> Result<EigenDecomposition> {
    let out = jacobi_eigen(rho.matrix())?;
    EigenDecomposition::assemble(out.eigenvalues, out.eigenvectors, rho.tickers().to_vec())
}

/// `(λ_1 + … + λ_k) / (λ_1 + … + λ_N)`.
pub fn cumulative_explained_variance(decomp: &EigenDecomposition, k: usize) -> Result<f64> {
    let n = decomp.dim();
    if k == 0 || k > n {
        return Err(Error::ComponentOutOfRange { k, n });
    }
    let values = decomp.eigenvalues().as_slice();
    // both sums accumulate in the same order, so k = N yields exactly 1
    Ok(total_variance(&values[..k]) / total_variance(values))
}

/// Projections of standardized return rows onto the leading `k` eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorScores {
    scores: DMatrix<f64>,
}

impl FactorScores {
    pub fn new(scores: DMatrix<f64>) -> Self {
        Self { scores }
    }

    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    pub fn k(&self) -> usize {
        self.scores.ncols()
    }
}

/// `R̃ · Q[:, ..k]`.
pub fn project(std: &StandardizedReturns, decomp: &EigenDecomposition, k: usize) -> Result<FactorScores> {
    if std.tickers() != decomp.tickers() {
        return Err(Error::TickerMismatch);
    }
    let n = decomp.dim();
    if k == 0 || k > n {
        return Err(Error::ComponentOutOfRange { k, n });
    }
    let basis = decomp.eigenvectors().columns(0, k);
    Ok(FactorScores::new(std.matrix() * basis))
}

/// Rank-`k` approximation `scores · Q[:, ..k]ᵀ` of the standardized returns.
pub fn reconstruct(scores: &FactorScores, decomp: &EigenDecomposition) -> Result<DMatrix<f64>> {
    let n = decomp.dim();
    let k = scores.k();
    if k > n {
        return Err(Error::DimensionMismatch(format!(
            "{k} score columns for {n} components"
        )));
    }
    let basis = decomp.eigenvectors().columns(0, k);
    Ok(scores.scores() * basis.transpose())
}

/// Sample variance (divisor `M-1`) of a series.
pub fn sample_variance(series: &[f64]) -> f64 {
    let m = series.len() as f64;
    let mean = series.iter().sum::<f64>() / m;
    series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)
}
