//! Two-level Monte Carlo of the portfolio liability.
//!
//! The outer level draws one trend scenario per index and builds its
//! surface; the inner level simulates every annuitant's curtate lifetime.
//! Sample `(s, i)` uses its own substream, so output is identical for any
//! thread count.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leecarter::LeeCarterParams;
use crate::rng::{lifetime_stream, trend_stream};
use crate::surface::{cohort_view, AgeTail, CohortSpec, MortalitySurface, DEFAULT_OMEGA_MAX};
use crate::trend::{build_surface, draw_scenario, SurfaceVariant, TrendFit};
use crate::valuation::lifetimes::{annuity_certain_table, LifetimeSampler};
use crate::valuation::portfolio::{replicate, Portfolio};
use crate::valuation::stats::ValuationResult;
use crate::valuation::tables::{annuity_factor, check_rate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One fixed surface; only lifetime sampling varies.
    Deterministic,
    /// A fresh trend draw per outer scenario.
    Stochastic,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Deterministic => "deterministic",
            Mode::Stochastic => "stochastic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationConfig {
    /// Annual discrete discount rate `i`.
    pub discount_rate: f64,
    pub n_scenarios: usize,
    /// Lifetime simulations per scenario.
    pub n_inner: usize,
    pub seed: u64,
    pub omega_max: u32,
    /// Number of portfolio copies.
    pub replication: usize,
    pub variant: SurfaceVariant,
    pub mode: Mode,
    /// First calendar year of exposure; defaults to the year after the fit.
    pub valuation_year: Option<i32>,
    /// Worker threads, 0 for the rayon default. Never affects results.
    #[serde(skip)]
    pub threads: usize,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        Self {
            discount_rate: 0.025,
            n_scenarios: 200,
            n_inner: 100,
            seed: 0,
            omega_max: DEFAULT_OMEGA_MAX,
            replication: 1,
            variant: SurfaceVariant::Raw,
            mode: Mode::Stochastic,
            valuation_year: None,
            threads: 0,
        }
    }
}

impl ValuationConfig {
    pub fn validate(&self) -> Result<()> {
        check_rate(self.discount_rate).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.n_scenarios == 0 || self.n_inner == 0 {
            return Err(Error::InvalidConfig(
                "n_scenarios and n_inner must be positive".into(),
            ));
        }
        if self.n_scenarios.checked_mul(self.n_inner).is_none() {
            return Err(Error::InvalidConfig("sample count overflows".into()));
        }
        if self.replication == 0 {
            return Err(Error::InvalidConfig(
                "replication must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.n_scenarios * self.n_inner
    }

    fn cohort_spec(&self) -> CohortSpec {
        CohortSpec {
            omega_max: self.omega_max,
            age_tail: AgeTail::HoldLast,
        }
    }
}

/// Members grouped by distinct age so samplers are built once per age.
struct Layout {
    ages: Vec<u32>,
    /// `(age slot, annuity)` per member, in portfolio order.
    members: Vec<(usize, f64)>,
}

impl Layout {
    fn new(portfolio: &Portfolio) -> Self {
        let mut slot_of = BTreeMap::new();
        for m in portfolio.members() {
            slot_of.entry(m.age).or_insert(0usize);
        }
        let ages: Vec<u32> = slot_of.keys().copied().collect();
        for (slot, age) in ages.iter().enumerate() {
            slot_of.insert(*age, slot);
        }
        let members = portfolio
            .members()
            .iter()
            .map(|m| (slot_of[&m.age], m.annuity))
            .collect();
        Self { ages, members }
    }

    fn samplers(
        &self,
        surface: &MortalitySurface,
        valuation_year: i32,
        spec: &CohortSpec,
    ) -> Result<Vec<LifetimeSampler>> {
        self.ages
            .iter()
            .map(|&age| {
                let generation = valuation_year - age as i32;
                Ok(LifetimeSampler::new(
                    &cohort_view(surface, generation, age, spec)?.q,
                ))
            })
            .collect()
    }
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))
}

fn sample_liabilities(
    config: &ValuationConfig,
    layout: &Layout,
    tables: &[Arc<Vec<LifetimeSampler>>],
) -> Vec<f64> {
    let max_years = tables
        .iter()
        .flat_map(|t| t.iter().map(LifetimeSampler::max_years))
        .max()
        .unwrap_or(0);
    let certain = annuity_certain_table(config.discount_rate, max_years);
    let n_inner = config.n_inner;
    (0..config.total_samples())
        .into_par_iter()
        .map(|idx| {
            let (s, i) = (idx / n_inner, idx % n_inner);
            let samplers = &tables[s];
            let mut rng = lifetime_stream(config.seed, s as u64, i as u64);
            layout
                .members
                .iter()
                .map(|&(slot, annuity)| annuity * certain[samplers[slot].sample(&mut rng) as usize])
                .sum()
        })
        .collect()
}

fn prepare(config: &ValuationConfig, portfolio: &Portfolio) -> Result<Portfolio> {
    config.validate()?;
    portfolio.check_ages(config.omega_max)?;
    replicate(portfolio, config.replication)
}

/// Values the portfolio under the Lee-Carter fit and its trend law.
///
/// Deterministic mode uses the mean-reference surface and requires a single
/// scenario; stochastic mode draws one trend scenario per outer index and
/// builds its surface with `config.variant`.
pub fn run_valuation(
    config: &ValuationConfig,
    params: &LeeCarterParams,
    fit: &TrendFit,
    portfolio: &Portfolio,
) -> Result<ValuationResult> {
    let book = prepare(config, portfolio)?;
    let valuation_year = config.valuation_year.unwrap_or(fit.t_big_m + 1);
    let last_needed =
        i64::from(valuation_year) + i64::from(config.omega_max) - i64::from(book.min_age()) - 1;
    let horizon = i32::try_from(last_needed.max(i64::from(fit.t_big_m) + 1))
        .map_err(|_| Error::InvalidConfig("projection horizon overflows".into()))?;
    let spec = config.cohort_spec();
    let layout = Layout::new(&book);
    let pool = thread_pool(config.threads)?;

    let tables: Vec<Arc<Vec<LifetimeSampler>>> = match config.mode {
        Mode::Deterministic => {
            if config.n_scenarios != 1 {
                return Err(Error::InvalidConfig(format!(
                    "deterministic mode uses a single scenario, got {}",
                    config.n_scenarios
                )));
            }
            let surface = build_surface(params, fit, None, SurfaceVariant::MeanReference, horizon)?;
            vec![Arc::new(layout.samplers(
                &surface,
                valuation_year,
                &spec,
            )?)]
        }
        Mode::Stochastic => {
            if !config.variant.needs_scenario() {
                return Err(Error::InvalidConfig(format!(
                    "stochastic mode needs a scenario-driven variant, got {}",
                    config.variant
                )));
            }
            pool.install(|| {
                (0..config.n_scenarios)
                    .into_par_iter()
                    .map(|s| {
                        let scenario = draw_scenario(fit, &mut trend_stream(config.seed, s as u64));
                        let surface =
                            build_surface(params, fit, Some(&scenario), config.variant, horizon)?;
                        Ok(Arc::new(layout.samplers(
                            &surface,
                            valuation_year,
                            &spec,
                        )?))
                    })
                    .collect::<Result<Vec<_>>>()
            })?
        }
    };

    let samples = pool.install(|| sample_liabilities(config, &layout, &tables));
    ValuationResult::from_samples(samples, config.n_scenarios, config.n_inner)
}

/// Values the portfolio on one fixed surface. Every outer group shares the
/// surface, so grouping only partitions the lifetime samples.
pub fn run_valuation_on_surface(
    config: &ValuationConfig,
    surface: &MortalitySurface,
    valuation_year: i32,
    portfolio: &Portfolio,
) -> Result<ValuationResult> {
    let book = prepare(config, portfolio)?;
    let layout = Layout::new(&book);
    let samplers = Arc::new(layout.samplers(surface, valuation_year, &config.cohort_spec())?);
    let tables = vec![samplers; config.n_scenarios];
    let pool = thread_pool(config.threads)?;
    let samples = pool.install(|| sample_liabilities(config, &layout, &tables));
    ValuationResult::from_samples(samples, config.n_scenarios, config.n_inner)
}

/// Exact expected liability `Σ_j r_j a(x_j)` on a fixed surface.
pub fn expected_liability(
    surface: &MortalitySurface,
    portfolio: &Portfolio,
    discount_rate: f64,
    valuation_year: i32,
    spec: &CohortSpec,
) -> Result<f64> {
    portfolio
        .members()
        .iter()
        .map(|m| {
            let generation = valuation_year - m.age as i32;
            Ok(m.annuity * annuity_factor(surface, m.age, generation, discount_rate, spec)?)
        })
        .sum()
}
