use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("invalid date {raw:?} on line {line}")]
    InvalidDate { raw: String, line: u64 },

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("dates not increasing: {next} follows {prev}")]
    NonIncreasingDates { prev: NaiveDate, next: NaiveDate },

    #[error("row {line} has {got} cells, expected {expected}")]
    RaggedRow { line: u64, got: usize, expected: usize },

    #[error("missing value for {ticker} on {date}")]
    MissingValue { ticker: String, date: NaiveDate },

    #[error("non-numeric value {raw:?} for {ticker} on {date}")]
    InvalidNumber {
        ticker: String,
        date: NaiveDate,
        raw: String,
    },

    #[error("non-positive price {value} for {ticker} on {date}")]
    NonPositivePrice {
        ticker: String,
        date: NaiveDate,
        value: f64,
    },

    #[error("column {0} has no observations")]
    NoObservations(String),

    #[error("invalid return {value} for {ticker} at row {row}")]
    InvalidReturn { ticker: String, row: usize, value: f64 },

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("train fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),

    #[error("split of {rows} rows at fraction {fraction} leaves an empty {side} set")]
    EmptySplit {
        rows: usize,
        fraction: f64,
        side: &'static str,
    },

    #[error("zero variance in column {0}")]
    ZeroVariance(String),

    #[error("not a correlation matrix: {0}")]
    InvalidCorrelation(String),

    #[error("jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("eigenvalue {index} is negative ({value:e})")]
    NegativeEigenvalue { index: usize, value: f64 },

    #[error("component count {k} out of range 1..={n}")]
    ComponentOutOfRange { k: usize, n: usize },

    #[error("ticker mismatch between inputs")]
    TickerMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate normalization for component {component}: denominator {denominator:e}")]
    DegenerateNormalization { component: usize, denominator: f64 },

    #[error("return series is empty")]
    EmptySeries,

    #[error("series of length {0} is too short, need at least 2")]
    SeriesTooShort(usize),

    #[error("undefined Sharpe: volatility is zero")]
    UndefinedSharpe,

    #[error("all components were excluded from ranking")]
    AllComponentsExcluded,

    #[error("ensemble size {n} out of range 1..={available}")]
    InvalidEnsembleSize { n: usize, available: usize },

    #[error("non-positive Sharpe in ensemble: component {component} has Sharpe {sharpe}")]
    NonPositiveSharpe { component: usize, sharpe: f64 },

    #[error("no components with positive Sharpe")]
    NoPositiveSharpe,

    #[error("reports cover different test periods")]
    PeriodMismatch,

    #[error("need at least {needed} reports, got {got}")]
    TooFewReports { needed: usize, got: usize },

    #[error("empty ticker list")]
    NoTickers,

    #[error("invalid configuration: {0}")]
    Config(String),
}
