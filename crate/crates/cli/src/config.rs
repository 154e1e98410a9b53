//! Run settings layered as defaults, then a TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use longevity_core::{Mode, SurfaceVariant, ValuationConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MIN_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Deterministic,
    Stochastic,
    Both,
}

impl RunMode {
    pub fn modes(self) -> &'static [Mode] {
        match self {
            RunMode::Deterministic => &[Mode::Deterministic],
            RunMode::Stochastic => &[Mode::Stochastic],
            RunMode::Both => &[Mode::Deterministic, Mode::Stochastic],
        }
    }
}

/// Every key is optional so a file and the flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub surface: Option<PathBuf>,
    pub portfolio: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub trend: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub discount_rate: Option<f64>,
    pub scenarios: Option<usize>,
    pub inner: Option<usize>,
    pub mode: Option<RunMode>,
    pub variant: Option<SurfaceVariant>,
    pub omega_max: Option<u32>,
    pub replications: Option<Vec<usize>>,
    pub valuation_year: Option<i32>,
    pub horizon_year: Option<i32>,
    pub confidence: Option<f64>,
    pub workers: Option<usize>,
    pub histogram_bins: Option<usize>,
    pub paths: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        Settings { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Settings {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a TOML file; relative paths inside it are taken from its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut s = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut s.surface,
            &mut s.portfolio,
            &mut s.params,
            &mut s.trend,
            &mut s.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(s)
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay!(base, top;
            surface, portfolio, params, trend, out_dir, seed, discount_rate, scenarios,
            inner, mode, variant, omega_max, replications, valuation_year, horizon_year,
            confidence, workers, histogram_bins, paths)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn omega_max(&self) -> u32 {
        self.omega_max
            .unwrap_or(longevity_core::surface::DEFAULT_OMEGA_MAX)
    }

    pub fn confidence(&self) -> CliResult<f64> {
        let c = self.confidence.unwrap_or(0.95);
        if c > 0.0 && c < 1.0 {
            Ok(c)
        } else {
            Err(CliError::Config(format!(
                "confidence must lie in (0, 1), got {c}"
            )))
        }
    }
}

/// Fully resolved settings of a `simulate` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub surface: Option<PathBuf>,
    pub fitted: Option<(PathBuf, PathBuf)>,
    pub portfolio: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub discount_rate: f64,
    pub scenarios: usize,
    pub inner: usize,
    pub mode: RunMode,
    pub variant: SurfaceVariant,
    pub omega_max: u32,
    pub replications: Vec<usize>,
    pub valuation_year: Option<i32>,
    pub workers: usize,
    pub histogram_bins: usize,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        let fitted = match (&s.params, &s.trend) {
            (Some(p), Some(t)) => Some((p.clone(), t.clone())),
            (None, None) => None,
            _ => {
                return Err(CliError::Config(
                    "params and trend must be given together".into(),
                ))
            }
        };
        if fitted.is_none() && s.surface.is_none() {
            return Err(CliError::Config(
                "simulate needs a surface or fitted params and trend".into(),
            ));
        }
        let portfolio = s
            .portfolio
            .clone()
            .ok_or_else(|| CliError::Config("simulate needs a portfolio".into()))?;
        let cfg = Self {
            surface: s.surface.clone(),
            fitted,
            portfolio,
            out_dir: s.out_dir(),
            seed: s.seed(),
            discount_rate: s.discount_rate.unwrap_or(0.025),
            scenarios: s.scenarios.unwrap_or(200),
            inner: s.inner.unwrap_or(100),
            mode: s.mode.unwrap_or(RunMode::Both),
            variant: s.variant.unwrap_or(SurfaceVariant::Raw),
            omega_max: s.omega_max(),
            replications: s.replications.clone().unwrap_or_else(|| vec![1]),
            valuation_year: s.valuation_year,
            workers: s.workers.unwrap_or(0),
            histogram_bins: s.histogram_bins.unwrap_or(50),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        let total = self.scenarios.saturating_mul(self.inner);
        if self.scenarios == 0 || self.inner == 0 || total < MIN_SAMPLES {
            return Err(CliError::Config(format!(
                "scenarios x inner must be at least {MIN_SAMPLES}, got {} x {}",
                self.scenarios, self.inner
            )));
        }
        if self.replications.is_empty() || self.replications.contains(&0) {
            return Err(CliError::Config("replications must be positive".into()));
        }
        if self.histogram_bins == 0 {
            return Err(CliError::Config("histogram_bins must be positive".into()));
        }
        if self.mode != RunMode::Deterministic && !self.variant.needs_scenario() {
            return Err(CliError::Config(format!(
                "stochastic runs need a scenario-driven variant, got {}",
                self.variant
            )));
        }
        for path in self.input_paths() {
            if !path.exists() {
                return Err(CliError::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        Ok(())
    }

    fn input_paths(&self) -> Vec<&Path> {
        let mut v = vec![self.portfolio.as_path()];
        match &self.fitted {
            Some((p, t)) => v.extend([p.as_path(), t.as_path()]),
            None => v.extend(self.surface.as_deref()),
        }
        v
    }

    /// Core configuration of one run. Deterministic runs fold all samples
    /// into a single scenario.
    pub fn valuation(&self, mode: Mode, replication: usize) -> ValuationConfig {
        let (n_scenarios, n_inner) = match mode {
            Mode::Deterministic => (1, self.scenarios * self.inner),
            Mode::Stochastic => (self.scenarios, self.inner),
        };
        ValuationConfig {
            discount_rate: self.discount_rate,
            n_scenarios,
            n_inner,
            seed: self.seed,
            omega_max: self.omega_max,
            replication,
            variant: self.variant,
            mode,
            valuation_year: self.valuation_year,
            threads: self.workers,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = Settings::parse("seed = 3\nscenarios = 50\nmode = \"stochastic\"\n").unwrap();
        let flags = Settings {
            seed: Some(9),
            ..Settings::default()
        };
        let s = file.overlay(flags);
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.scenarios, Some(50));
        assert_eq!(s.mode, Some(RunMode::Stochastic));
        assert_eq!(s.inner, None);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(Settings::parse("sed = 3\n").is_err());
        assert!(Settings::parse("seed = \"x\"\n").is_err());
    }

    #[test]
    fn sample_floor_enforced() {
        let s = Settings {
            surface: Some("Cargo.toml".into()),
            portfolio: Some("Cargo.toml".into()),
            scenarios: Some(10),
            inner: Some(99),
            ..Settings::default()
        };
        let err = RunConfig::from_settings(&s).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_VALIDATION);
        let ok = RunConfig::from_settings(&Settings {
            inner: Some(100),
            ..s
        })
        .unwrap();
        assert_eq!(ok.valuation(Mode::Deterministic, 1).n_inner, 1_000);
        assert_eq!(ok.valuation(Mode::Deterministic, 1).n_scenarios, 1);
    }

    #[test]
    fn missing_input_is_io() {
        let s = Settings {
            surface: Some("no/such/surface.csv".into()),
            portfolio: Some("Cargo.toml".into()),
            ..Settings::default()
        };
        let err = RunConfig::from_settings(&s).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_IO);
        assert!(err.to_string().contains("no/such/surface.csv"));
    }

    #[test]
    fn mean_reference_needs_deterministic() {
        let s = Settings {
            surface: Some("Cargo.toml".into()),
            portfolio: Some("Cargo.toml".into()),
            variant: Some(SurfaceVariant::MeanReference),
            ..Settings::default()
        };
        assert!(RunConfig::from_settings(&s).is_err());
        let s = Settings {
            mode: Some(RunMode::Deterministic),
            ..s
        };
        assert!(RunConfig::from_settings(&s).is_ok());
    }
}
