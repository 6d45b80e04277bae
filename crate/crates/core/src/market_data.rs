//! Price ingestion, daily linear returns and the chronological train/test split.
//!
//! Input is a wide CSV panel: a `date` column (ISO `YYYY-MM-DD`) followed by one
//! column per ticker. Prices must be positive; how empty cells are treated is
//! controlled by [`MissingPolicy`].

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// What to do with empty cells in the price CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Any empty cell is an error.
    #[default]
    Strict,
    /// Empty cells repeat the last observed price of their column. Leading rows
    /// before the latest first observation across columns are dropped.
    ForwardFill,
}

impl FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Self::Strict),
            "ffill" | "forward-fill" => Ok(Self::ForwardFill),
            other => Err(Error::Config(format!("unknown missing-data policy {other:?}"))),
        }
    }
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Strict => f.write_str("strict"),
            Self::ForwardFill => f.write_str("ffill"),
        }
    }
}

/// A dated `T x N` panel of strictly positive prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: DMatrix<f64>,
}

impl PriceTable {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: DMatrix<f64>) -> Result<Self> {
        validate_tickers(&tickers)?;
        validate_dates(&dates)?;
        if prices.nrows() != dates.len() || prices.ncols() != tickers.len() {
            return Err(Error::DimensionMismatch(format!(
                "price matrix is {}x{}, expected {}x{}",
                prices.nrows(),
                prices.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        for (t, date) in dates.iter().enumerate() {
            for (i, ticker) in tickers.iter().enumerate() {
                let value = prices[(t, i)];
                if !(value.is_finite() && value > 0.0) {
                    return Err(Error::NonPositivePrice {
                        ticker: ticker.clone(),
                        date: *date,
                        value,
                    });
                }
            }
        }
        Ok(Self { dates, tickers, prices })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// Writes the panel in the same CSV layout [`load_prices`] reads. Values use
    /// the shortest representation that parses back to the identical `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.tickers.iter().cloned());
        out.write_record(&header)?;
        for (t, date) in self.dates.iter().enumerate() {
            let mut record = vec![date.format(DATE_FORMAT).to_string()];
            record.extend(self.prices.row(t).iter().map(|p| p.to_string()));
            out.write_record(&record)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// `(T-1) x N` daily linear returns, each dated with the later price of its pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTable {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    returns: DMatrix<f64>,
}

impl ReturnTable {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, returns: DMatrix<f64>) -> Result<Self> {
        validate_tickers(&tickers)?;
        validate_dates(&dates)?;
        if returns.nrows() != dates.len() || returns.ncols() != tickers.len() {
            return Err(Error::DimensionMismatch(format!(
                "return matrix is {}x{}, expected {}x{}",
                returns.nrows(),
                returns.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        for t in 0..returns.nrows() {
            for (i, ticker) in tickers.iter().enumerate() {
                let value = returns[(t, i)];
                if !(value.is_finite() && value > -1.0) {
                    return Err(Error::InvalidReturn {
                        ticker: ticker.clone(),
                        row: t,
                        value,
                    });
                }
            }
        }
        Ok(Self {
            dates,
            tickers,
            returns,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.returns.column(i).iter().copied().collect()
    }

    fn slice_rows(&self, start: usize, len: usize) -> Self {
        Self {
            dates: self.dates[start..start + len].to_vec(),
            tickers: self.tickers.clone(),
            returns: self.returns.rows(start, len).into_owned(),
        }
    }
}

/// Reads a price panel from CSV text.
pub fn load_prices<R: Read>(source: R, policy: MissingPolicy) -> Result<PriceTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header = reader.headers()?.clone();
    let mut fields = header.iter();
    match fields.next() {
        Some(first) if first.trim_start_matches('\u{feff}') == "date" => {}
        Some(first) => {
            return Err(Error::MalformedHeader(format!(
                "first column must be `date`, found {first:?}"
            )))
        }
        None => return Err(Error::MalformedHeader("empty header".into())),
    }
    let tickers: Vec<String> = fields.map(str::to_string).collect();
    if tickers.is_empty() {
        return Err(Error::MalformedHeader("no ticker columns".into()));
    }
    validate_tickers(&tickers)?;

    let mut dates = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != tickers.len() + 1 {
            return Err(Error::RaggedRow {
                line,
                got: record.len(),
                expected: tickers.len() + 1,
            });
        }
        let raw_date = &record[0];
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|_| Error::InvalidDate {
            raw: raw_date.to_string(),
            line,
        })?;
        let mut row = Vec::with_capacity(tickers.len());
        for (ticker, raw) in tickers.iter().zip(record.iter().skip(1)) {
            if raw.is_empty() {
                row.push(None);
                continue;
            }
            let value: f64 = raw.parse().map_err(|_| Error::InvalidNumber {
                ticker: ticker.clone(),
                date,
                raw: raw.to_string(),
            })?;
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositivePrice {
                    ticker: ticker.clone(),
                    date,
                    value,
                });
            }
            row.push(Some(value));
        }
        dates.push(date);
        cells.push(row);
    }
    validate_dates(&dates)?;

    let (dates, cells) = match policy {
        MissingPolicy::Strict => {
            for (date, row) in dates.iter().zip(&cells) {
                if let Some(i) = row.iter().position(Option::is_none) {
                    return Err(Error::MissingValue {
                        ticker: tickers[i].clone(),
                        date: *date,
                    });
                }
            }
            (dates, cells)
        }
        MissingPolicy::ForwardFill => forward_fill(&tickers, dates, cells)?,
    };

    let n = tickers.len();
    let prices = DMatrix::from_fn(dates.len(), n, |t, i| {
        cells[t][i].expect("cells are complete after policy is applied")
    });
    PriceTable::new(dates, tickers, prices)
}

/// Convenience wrapper around [`load_prices`] for a file on disk.
pub fn load_prices_path(path: impl AsRef<Path>, policy: MissingPolicy) -> Result<PriceTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_prices(std::io::BufReader::new(file), policy)
}

type Cells = Vec<Vec<Option<f64>>>;

fn forward_fill(tickers: &[String], dates: Vec<NaiveDate>, mut cells: Cells) -> Result<(Vec<NaiveDate>, Cells)> {
    let mut start = 0;
    for (i, ticker) in tickers.iter().enumerate() {
        let first = cells
            .iter()
            .position(|row| row[i].is_some())
            .ok_or_else(|| Error::NoObservations(ticker.clone()))?;
        start = start.max(first);

        let mut last = None;
        for row in cells.iter_mut() {
            match row[i] {
                Some(v) => last = Some(v),
                None => row[i] = last,
            }
        }
    }
    let dates = dates[start..].to_vec();
    let cells = cells.split_off(start);
    Ok((dates, cells))
}

/// Daily linear returns `(p[t+1] - p[t]) / p[t]`, dated at `t+1`.
pub fn compute_returns(prices: &PriceTable) -> Result<ReturnTable> {
    let rows = prices.n_rows();
    if rows < 2 {
        return Err(Error::TooFewRows { needed: 2, got: rows });
    }
    let p = prices.prices();
    let returns = DMatrix::from_fn(rows - 1, prices.n_assets(), |t, i| {
        (p[(t + 1, i)] - p[(t, i)]) / p[(t, i)]
    });
    ReturnTable::new(prices.dates[1..].to_vec(), prices.tickers.clone(), returns)
}

/// Splits returns into the first `floor(rows * train_fraction)` rows and the rest.
///
/// A slack of `1e-9` is added before flooring so that fractions like `0.7`,
/// which are not exact in binary, still land on the intended row count.
pub fn chronological_split(returns: &ReturnTable, train_fraction: f64) -> Result<(ReturnTable, ReturnTable)> {
    let rows = returns.n_rows();
    if rows < 2 {
        return Err(Error::TooFewRows { needed: 2, got: rows });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidFraction(train_fraction));
    }
    let n_train = (rows as f64 * train_fraction + 1e-9).floor() as usize;
    let side = if n_train == 0 {
        Some("train")
    } else if n_train >= rows {
        Some("test")
    } else {
        None
    };
    if let Some(side) = side {
        return Err(Error::EmptySplit {
            rows,
            fraction: train_fraction,
            side,
        });
    }
    Ok((
        returns.slice_rows(0, n_train),
        returns.slice_rows(n_train, rows - n_train),
    ))
}

fn validate_tickers(tickers: &[String]) -> Result<()> {
    if tickers.is_empty() {
        return Err(Error::NoTickers);
    }
    for (i, ticker) in tickers.iter().enumerate() {
        if ticker.is_empty() {
            return Err(Error::MalformedHeader(format!("empty ticker in column {}", i + 1)));
        }
        if tickers[..i].contains(ticker) {
            return Err(Error::MalformedHeader(format!("duplicate ticker {ticker:?}")));
        }
    }
    Ok(())
}

fn validate_dates(dates: &[NaiveDate]) -> Result<()> {
    for pair in dates.windows(2) {
        if pair[1] == pair[0] {
            return Err(Error::DuplicateDate(pair[1]));
        }
        if pair[1] < pair[0] {
            return Err(Error::NonIncreasingDates {
                prev: pair[0],
                next: pair[1],
            });
        }
    }
    Ok(())
}
