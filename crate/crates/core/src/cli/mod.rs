//! Command-line front end: `analyze`, `rank` and `backtest`.

mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{ConfigLayer, RunConfig, DEFAULT_OUT, OUT_ENV};

use crate::backtest::{compare, equal_weight_benchmark, run_backtest, write_cumulative_csv, BacktestReport};
use crate::eigen::{cumulative_explained_variance, eigh, EigenDecomposition};
use crate::eigenportfolio::{
    eigen_portfolio, ensemble_weights, rank_components, sweep_ensemble_size, top_positions, Normalization,
    PortfolioWeights, RankedComponents,
};
use crate::error::{Error, Result};
use crate::market_data::{chronological_split, compute_returns, load_prices_path, MissingPolicy, ReturnTable};
use crate::stats::{correlation_matrix, standardize, CorrelationMatrix};

const WEIGHT_FILES: usize = 5;
const TOP_POSITIONS: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Pipeline(#[from] Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "eigenfolio",
    version,
    about = "PCA eigen-portfolios: analysis, Sharpe ranking and backtests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Correlation matrix, eigenvalues with explained variance, leading eigen-portfolio weights.
    Analyze(CommonArgs),
    /// Rank every eigen-portfolio by in-sample Sharpe ratio.
    Rank(CommonArgs),
    /// Evaluate strategies on the held-out split.
    Backtest {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Strategy::All)]
        strategy: Strategy,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    BestSingle,
    Ensemble,
    EqualWeight,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormalizationArg {
    Signed,
    Abs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MissingArg {
    Strict,
    Ffill,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Price CSV: a `date` column followed by one column per ticker.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    periods_per_year: Option<u32>,
    #[arg(long, value_enum)]
    normalization: Option<NormalizationArg>,
    #[arg(long, value_enum)]
    missing: Option<MissingArg>,
    /// Largest ensemble size to evaluate (default: number of assets).
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    risk_free_daily: Option<f64>,
    /// Output directory (default: $EIGENFOLIO_OUT, then ./eigenfolio-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => ConfigLayer::load(path)?,
            None => ConfigLayer::default(),
        };
        let flags = ConfigLayer {
            input: self.input.clone(),
            train_fraction: self.train_fraction,
            periods_per_year: self.periods_per_year,
            normalization: self.normalization.map(|n| match n {
                NormalizationArg::Signed => Normalization::SignedSumOne,
                NormalizationArg::Abs => Normalization::AbsSumOne,
            }),
            missing: self.missing.map(|m| match m {
                MissingArg::Strict => MissingPolicy::Strict,
                MissingArg::Ffill => MissingPolicy::ForwardFill,
            }),
            n_max: self.n_max.map(Some),
            risk_free_daily: self.risk_free_daily,
            out: self.out.clone(),
        };
        let env_out = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        RunConfig::resolve(file, flags, env_out)
    }
}

/// Parses `args` (including the program name) and runs the selected command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match cli.command {
        Command::Analyze(common) => cmd_analyze(&common.resolve()?)?,
        Command::Rank(common) => cmd_rank(&common.resolve()?)?,
        Command::Backtest { common, strategy } => cmd_backtest(&common.resolve()?, strategy)?,
    }
    Ok(())
}

/// Everything up to the eigendecomposition of the training correlation matrix.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub train: ReturnTable,
    pub test: ReturnTable,
    pub correlation: CorrelationMatrix,
    pub decomposition: EigenDecomposition,
}

impl Pipeline {
    pub fn build(config: &RunConfig) -> Result<Self> {
        let prices = load_prices_path(&config.input_path, config.missing_policy)?;
        let returns = compute_returns(&prices)?;
        let (train, test) = chronological_split(&returns, config.train_fraction)?;
        let correlation = correlation_matrix(&standardize(&train)?)?;
        let decomposition = eigh(&correlation)?;
        Ok(Self {
            train,
            test,
            correlation,
            decomposition,
        })
    }

    pub fn rank(&self, config: &RunConfig) -> Result<RankedComponents> {
        rank_components(
            &self.decomposition,
            &self.train,
            config.normalization,
            &config.sharpe_config(),
        )
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io { path, source })
}

fn prepare_output(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.output_dir).map_err(|source| Error::Io {
        path: config.output_dir.clone(),
        source,
    })?;
    let mut f = create(&config.output_dir, "run_config.txt")?;
    write_all(
        &mut f,
        config.to_config_text().as_bytes(),
        &config.output_dir.join("run_config.txt"),
    )
}

fn write_all(w: &mut impl Write, bytes: &[u8], path: &Path) -> Result<()> {
    w.write_all(bytes).and_then(|_| w.flush()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `correlation.csv`, `eigen.csv` and `weights_pc1.csv` .. `weights_pc5.csv`.
pub fn cmd_analyze(config: &RunConfig) -> Result<()> {
    let pipeline = Pipeline::build(config)?;
    prepare_output(config)?;
    let dir = &config.output_dir;
    pipeline.correlation.write_csv(create(dir, "correlation.csv")?)?;
    pipeline.decomposition.write_csv(create(dir, "eigen.csv")?)?;

    let decomp = &pipeline.decomposition;
    for component in 0..decomp.dim().min(WEIGHT_FILES) {
        let weights = eigen_portfolio(decomp, component, config.normalization).ok();
        let mut out = csv::Writer::from_writer(create(dir, &format!("weights_pc{}.csv", component + 1))?);
        out.write_record(["ticker", "eigenvector", "weight"])?;
        for (j, ticker) in decomp.tickers().iter().enumerate() {
            out.write_record([
                ticker.clone(),
                crate::fmt_decimal(decomp.eigenvectors()[(j, component)]),
                weights
                    .as_ref()
                    .map(|w| crate::fmt_decimal(w.weights()[j]))
                    .unwrap_or_default(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
    }

    println!("{:>9}  {:>12}  {:>10}", "component", "eigenvalue", "cumulative");
    for k in 1..=decomp.dim().min(10) {
        println!(
            "{:>9}  {:>12.6}  {:>9.2}%",
            k - 1,
            decomp.eigenvalues()[k - 1],
            100.0 * cumulative_explained_variance(decomp, k)?
        );
    }
    Ok(())
}

/// Writes `ranking.csv`, best Sharpe first and excluded components last.
pub fn cmd_rank(config: &RunConfig) -> Result<()> {
    let pipeline = Pipeline::build(config)?;
    let ranked = pipeline.rank(config)?;
    prepare_output(config)?;
    ranked.write_csv(create(&config.output_dir, "ranking.csv")?)?;

    println!(
        "{:>9}  {:>12}  {:>12}  {:>10}",
        "component", "return", "volatility", "sharpe"
    );
    for e in ranked.entries.iter().take(10) {
        println!(
            "{:>9}  {:>12.6}  {:>12.6}  {:>10.6}",
            e.component,
            e.metrics.annualized_return,
            e.metrics.annualized_volatility,
            e.sharpe()
        );
    }
    if !ranked.skipped.is_empty() {
        let skipped: Vec<String> = ranked.skipped.iter().map(|(c, why)| format!("{c} ({why})")).collect();
        println!("excluded: {}", skipped.join(", "));
    }
    Ok(())
}

fn write_positions(dir: &Path, name: &str, w: &PortfolioWeights) -> Result<()> {
    let top = top_positions(w, TOP_POSITIONS);
    let mut out = csv::Writer::from_writer(create(dir, name)?);
    out.write_record(["side", "ticker", "weight_pct"])?;
    for (side, list) in [("long", &top.longs), ("short", &top.shorts)] {
        for (ticker, weight) in list {
            out.write_record([side.to_string(), ticker.clone(), format!("{:.2}", weight * 100.0)])?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn write_report(dir: &Path, name: &str, report: &BacktestReport) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(&report.to_json())?;
    text.push('\n');
    write_all(&mut create(dir, name)?, text.as_bytes(), &path)
}

/// Runs the requested strategies on the held-out split and writes their reports.
///
/// `all` runs the equal-weight benchmark, the best single component and the best
/// ensemble on the same split and additionally writes `comparison.csv`.
pub fn cmd_backtest(config: &RunConfig, strategy: Strategy) -> Result<()> {
    let pipeline = Pipeline::build(config)?;
    let sharpe_config = config.sharpe_config();
    let dir = &config.output_dir;
    let wants = |s: Strategy| strategy == s || strategy == Strategy::All;

    let needs_ranking = wants(Strategy::BestSingle) || wants(Strategy::Ensemble);
    let ranked = if needs_ranking {
        Some(pipeline.rank(config)?)
    } else {
        None
    };

    let mut reports = Vec::new();
    let mut files: Vec<(String, PortfolioWeights)> = Vec::new();
    let mut curve = None;

    if wants(Strategy::EqualWeight) {
        let w = equal_weight_benchmark(pipeline.test.tickers())?;
        reports.push((
            "report_equal_weight.json",
            run_backtest(&w, &pipeline.test, "Equal Weight", &sharpe_config)?,
        ));
    }
    if let Some(ranked) = &ranked {
        if wants(Strategy::BestSingle) {
            let top = ranked.top();
            let report = run_backtest(&top.weights, &pipeline.test, "Single Component", &sharpe_config)?;
            files.push(("positions_best_single.csv".into(), top.weights.clone()));
            reports.push(("report_best_single.json", report));
        }
        if wants(Strategy::Ensemble) {
            let positive = ranked.positive_count();
            if positive == 0 {
                return Err(Error::NoPositiveSharpe);
            }
            let requested = config.n_max.unwrap_or(pipeline.decomposition.dim());
            let n_max = requested.min(positive);
            if n_max < requested && config.n_max.is_some() {
                eprintln!("note: n_max {requested} reduced to {n_max}, the number of positive-Sharpe components");
            }
            let sweep = sweep_ensemble_size(ranked, &pipeline.train, n_max, &sharpe_config)?;
            let spec = ensemble_weights(ranked, sweep.best_n)?;
            let label = format!("Best Ensemble (N={})", sweep.best_n);
            let report = run_backtest(&spec.combined, &pipeline.test, &label, &sharpe_config)?;
            files.push(("positions_ensemble.csv".into(), spec.combined.clone()));
            reports.push(("report_ensemble.json", report));
            curve = Some(sweep);
        }
    }

    prepare_output(config)?;
    for (name, report) in &reports {
        write_report(dir, name, report)?;
    }
    for (name, weights) in &files {
        write_positions(dir, name, weights)?;
    }
    if let Some(sweep) = &curve {
        let mut out = csv::Writer::from_writer(create(dir, "ensemble_curve.csv")?);
        out.write_record(["n", "sharpe"])?;
        for (n, s) in &sweep.curve {
            out.write_record([n.to_string(), crate::fmt_decimal(*s)])?;
        }
        out.flush().map_err(csv::Error::from)?;
    }
    let only_reports: Vec<BacktestReport> = reports.into_iter().map(|(_, r)| r).collect();
    write_cumulative_csv(&only_reports, create(dir, "cumulative.csv")?)?;

    if only_reports.len() >= 2 {
        let table = compare(&only_reports)?;
        table.write_csv(create(dir, "comparison.csv")?)?;
        print!("{}", table.render());
    } else {
        for r in &only_reports {
            let sharpe = r.metrics.sharpe.map_or_else(|| "n/a".into(), |s| format!("{s:.2}"));
            println!(
                "{}: return {:.2}%, volatility {:.2}%, Sharpe {}",
                r.label,
                100.0 * r.metrics.annualized_return,
                100.0 * r.metrics.annualized_volatility,
                sharpe
            );
        }
    }
    Ok(())
}
