//! Run configuration: defaults, an optional flat `key = value` file, then flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::eigenportfolio::{Normalization, SharpeConfig, TRADING_DAYS_PER_YEAR};
use crate::error::{Error, Result};
use crate::market_data::MissingPolicy;

pub const OUT_ENV: &str = "EIGENFOLIO_OUT";
pub const DEFAULT_OUT: &str = "eigenfolio-out";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub train_fraction: f64,
    pub periods_per_year: u32,
    pub normalization: Normalization,
    pub missing_policy: MissingPolicy,
    /// Largest ensemble size to try; `None` means every asset.
    pub n_max: Option<usize>,
    pub risk_free_daily: f64,
    pub output_dir: PathBuf,
}

/// Partially specified settings from one source. Later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigLayer {
    pub input: Option<PathBuf>,
    pub train_fraction: Option<f64>,
    pub periods_per_year: Option<u32>,
    pub normalization: Option<Normalization>,
    pub missing: Option<MissingPolicy>,
    pub n_max: Option<Option<usize>>,
    pub risk_free_daily: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ConfigLayer {
    pub fn parse(text: &str) -> Result<Self> {
        let mut layer = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            let bad = |what: &str| Error::Config(format!("line {}: invalid {what} {value:?}", lineno + 1));
            match key.as_str() {
                "input" => layer.input = Some(PathBuf::from(value)),
                "train_fraction" => layer.train_fraction = Some(value.parse().map_err(|_| bad("train_fraction"))?),
                "periods_per_year" => {
                    layer.periods_per_year = Some(value.parse().map_err(|_| bad("periods_per_year"))?)
                }
                "normalization" => layer.normalization = Some(value.parse()?),
                "missing" => layer.missing = Some(value.parse()?),
                "n_max" => {
                    layer.n_max = Some(if value == "auto" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| bad("n_max"))?)
                    })
                }
                "risk_free_daily" => layer.risk_free_daily = Some(value.parse().map_err(|_| bad("risk_free_daily"))?),
                "out" => layer.out = Some(PathBuf::from(value)),
                other => return Err(Error::Config(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        Ok(layer)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    fn overlay(self, top: Self) -> Self {
        Self {
            input: top.input.or(self.input),
            train_fraction: top.train_fraction.or(self.train_fraction),
            periods_per_year: top.periods_per_year.or(self.periods_per_year),
            normalization: top.normalization.or(self.normalization),
            missing: top.missing.or(self.missing),
            n_max: top.n_max.or(self.n_max),
            risk_free_daily: top.risk_free_daily.or(self.risk_free_daily),
            out: top.out.or(self.out),
        }
    }
}

impl RunConfig {
    /// Merges `flags` over `file`. The output directory falls back to
    /// `$EIGENFOLIO_OUT` (passed as `env_out`), then [`DEFAULT_OUT`].
    pub fn resolve(file: ConfigLayer, flags: ConfigLayer, env_out: Option<PathBuf>) -> Result<Self> {
        let merged = file.overlay(flags);
        let config = Self {
            input_path: merged
                .input
                .ok_or_else(|| Error::Config("no input file given (--input)".into()))?,
            train_fraction: merged.train_fraction.unwrap_or(0.8),
            periods_per_year: merged.periods_per_year.unwrap_or(TRADING_DAYS_PER_YEAR),
            normalization: merged.normalization.unwrap_or_default(),
            missing_policy: merged.missing.unwrap_or_default(),
            n_max: merged.n_max.flatten(),
            risk_free_daily: merged.risk_free_daily.unwrap_or(0.0),
            output_dir: merged.out.or(env_out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidFraction(self.train_fraction));
        }
        if self.periods_per_year == 0 {
            return Err(Error::Config("periods_per_year must be at least 1".into()));
        }
        if self.n_max == Some(0) {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if !self.risk_free_daily.is_finite() {
            return Err(Error::Config("risk_free_daily must be finite".into()));
        }
        Ok(())
    }

    pub fn sharpe_config(&self) -> SharpeConfig {
        SharpeConfig {
            periods_per_year: self.periods_per_year,
            risk_free_daily: self.risk_free_daily,
        }
    }

    /// The resolved configuration in the same format [`ConfigLayer::parse`] reads.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input = {}", self.input_path.display());
        let _ = writeln!(s, "train_fraction = {}", self.train_fraction);
        let _ = writeln!(s, "periods_per_year = {}", self.periods_per_year);
        let _ = writeln!(s, "normalization = {}", self.normalization);
        let _ = writeln!(s, "missing = {}", self.missing_policy);
        match self.n_max {
            Some(n) => {
                let _ = writeln!(s, "n_max = {n}");
            }
            None => s.push_str("n_max = auto\n"),
        }
        let _ = writeln!(s, "risk_free_daily = {}", self.risk_free_daily);
        let _ = writeln!(s, "out = {}", self.output_dir.display());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let flags = ConfigLayer {
            input: Some("prices.csv".into()),
            ..Default::default()
        };
        let c = RunConfig::resolve(ConfigLayer::default(), flags, None).unwrap();
        assert_eq!(c.train_fraction, 0.8);
        assert_eq!(c.periods_per_year, 252);
        assert_eq!(c.normalization, Normalization::SignedSumOne);
        assert_eq!(c.missing_policy, MissingPolicy::Strict);
        assert_eq!(c.n_max, None);
        assert_eq!(c.risk_free_daily, 0.0);
        assert_eq!(c.output_dir, PathBuf::from(DEFAULT_OUT));
    }

    #[test]
    fn flags_override_file_and_env_fills_default_out() {
        let file =
            ConfigLayer::parse("# run\ninput = a.csv\ntrain-fraction = 0.7\nmissing = ffill\nn_max = 3\n").unwrap();
        let flags = ConfigLayer {
            train_fraction: Some(0.6),
            ..Default::default()
        };
        let c = RunConfig::resolve(file, flags, Some("/tmp/env-out".into())).unwrap();
        assert_eq!(c.input_path, PathBuf::from("a.csv"));
        assert_eq!(c.train_fraction, 0.6);
        assert_eq!(c.missing_policy, MissingPolicy::ForwardFill);
        assert_eq!(c.n_max, Some(3));
        assert_eq!(c.output_dir, PathBuf::from("/tmp/env-out"));

        let flags = ConfigLayer {
            out: Some("explicit".into()),
            ..Default::default()
        };
        let file = ConfigLayer::parse("input = a.csv").unwrap();
        let c = RunConfig::resolve(file, flags, Some("/tmp/env-out".into())).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("explicit"));
    }

    #[test]
    fn echo_round_trips() {
        let file = ConfigLayer::parse("input = a.csv\nnormalization = abs\nrisk_free_daily = 0.0001\nout = o").unwrap();
        let c = RunConfig::resolve(file, ConfigLayer::default(), None).unwrap();
        let again = RunConfig::resolve(
            ConfigLayer::parse(&c.to_config_text()).unwrap(),
            ConfigLayer::default(),
            None,
        )
        .unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ConfigLayer::parse("bogus = 1").is_err());
        assert!(ConfigLayer::parse("no equals sign").is_err());
        assert!(ConfigLayer::parse("normalization = sideways").is_err());
        let file = ConfigLayer::parse("input = a\ntrain_fraction = 1.5").unwrap();
        assert!(RunConfig::resolve(file, ConfigLayer::default(), None).is_err());
        let file = ConfigLayer::parse("input = a\nn_max = 0").unwrap();
        assert!(RunConfig::resolve(file, ConfigLayer::default(), None).is_err());
        assert!(RunConfig::resolve(ConfigLayer::default(), ConfigLayer::default(), None).is_err());
    }
}
