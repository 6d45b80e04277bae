//! Column standardization and the empirical correlation matrix.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::market_data::ReturnTable;

const ZERO_VARIANCE: f64 = 1e-15;

/// Return columns shifted to zero mean and scaled to unit sample variance.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedReturns {
    matrix: DMatrix<f64>,
    means: DVector<f64>,
    stds: DVector<f64>,
    tickers: Vec<String>,
}

impl StandardizedReturns {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn stds(&self) -> &DVector<f64> {
        &self.stds
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Maps a standardized matrix with the same column layout back to return units.
    pub fn destandardize(&self, standardized: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if standardized.ncols() != self.tickers.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} columns, got {}",
                self.tickers.len(),
                standardized.ncols()
            )));
        }
        Ok(DMatrix::from_fn(standardized.nrows(), standardized.ncols(), |t, i| {
            standardized[(t, i)] * self.stds[i] + self.means[i]
        }))
    }
}

/// Standardizes each column with its mean and sample standard deviation (divisor `M-1`).
pub fn standardize(returns: &ReturnTable) -> Result<StandardizedReturns> {
    standardize_matrix(returns.returns(), returns.tickers())
}

/// [`standardize`] for an arbitrary `M x N` matrix with column labels.
pub fn standardize_matrix(raw: &DMatrix<f64>, tickers: &[String]) -> Result<StandardizedReturns> {
    let m = raw.nrows();
    if m < 3 {
        return Err(Error::TooFewRows { needed: 3, got: m });
    }
    let n = raw.ncols();
    if tickers.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} columns for {} tickers",
            tickers.len()
        )));
    }
    let mut means = DVector::zeros(n);
    let mut stds = DVector::zeros(n);
    for i in 0..n {
        let col = raw.column(i);
        let mean = col.sum() / m as f64;
        let ss: f64 = col.iter().map(|x| (x - mean) * (x - mean)).sum();
        let std = (ss / (m - 1) as f64).sqrt();
        if std <= ZERO_VARIANCE {
            return Err(Error::ZeroVariance(tickers[i].clone()));
        }
        means[i] = mean;
        stds[i] = std;
    }
    let matrix = DMatrix::from_fn(m, n, |t, i| (raw[(t, i)] - means[i]) / stds[i]);
    Ok(StandardizedReturns {
        matrix,
        means,
        stds,
        tickers: tickers.to_vec(),
    })
}

/// A symmetric `N x N` correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    matrix: DMatrix<f64>,
    tickers: Vec<String>,
}

impl CorrelationMatrix {
    /// Wraps an existing matrix after checking it is square, symmetric, unit-diagonal
    /// and bounded by one in magnitude.
    pub fn new(matrix: DMatrix<f64>, tickers: Vec<String>) -> Result<Self> {
        let n = tickers.len();
        if n == 0 {
            return Err(Error::NoTickers);
        }
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidCorrelation(format!(
                "matrix is {}x{} for {n} tickers",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for i in 0..n {
            if (matrix[(i, i)] - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidCorrelation(format!(
                    "diagonal entry {i} is {}",
                    matrix[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (matrix[(i, j)], matrix[(j, i)]);
                if !a.is_finite() || (a - b).abs() > 1e-12 {
                    return Err(Error::InvalidCorrelation(format!("entry ({i}, {j}) is not symmetric")));
                }
                if a.abs() > 1.0 + 1e-10 {
                    return Err(Error::InvalidCorrelation(format!("entry ({i}, {j}) = {a} exceeds one")));
                }
            }
        }
        Ok(Self { matrix, tickers })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dim(&self) -> usize {
        self.tickers.len()
    }

    /// Writes the matrix with a ticker header row and a ticker label column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.tickers.iter().cloned());
        out.write_record(&header)?;
        for (i, ticker) in self.tickers.iter().enumerate() {
            let mut record = vec![ticker.clone()];
            record.extend(self.matrix.row(i).iter().map(|v| crate::fmt_decimal(*v)));
            out.write_record(&record)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// `R̃ᵀR̃ / (M-1)`, symmetrized, with the diagonal pinned to one.
pub fn correlation_matrix(std: &StandardizedReturns) -> Result<CorrelationMatrix> {
    let m = std.n_rows();
    if m < 3 {
        return Err(Error::TooFewRows { needed: 3, got: m });
    }
    let x = std.matrix();
    let mut rho = x.tr_mul(x) / (m - 1) as f64;
    let n = rho.ncols();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (rho[(i, j)] + rho[(j, i)]);
            let clamped = avg.clamp(-1.0, 1.0);
            rho[(i, j)] = clamped;
            rho[(j, i)] = clamped;
        }
        rho[(i, i)] = 1.0;
    }
    Ok(CorrelationMatrix {
        matrix: rho,
        tickers: std.tickers().to_vec(),
    })
}
