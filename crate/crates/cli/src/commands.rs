//! The four commands. Each returns the paths it wrote.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use longevity_core::rng::trend_stream;
use longevity_core::surface::{AgeTail, CohortSpec};
use longevity_core::trend::{fan_chart, write_fan_csv};
use longevity_core::valuation::tables::drift_of_series;
use longevity_core::valuation::{
    expectancy_series, load_portfolio, write_histogram_csv, DriftComparison,
};
use longevity_core::{
    build_surface, decompose, draw_scenario, fit_lee_carter, fit_trend, load_surface, omega_n,
    project_kappa, run_valuation, save_surface, LeeCarterParams, Mode, MortalitySurface, Portfolio,
    SurfaceVariant, TrendFit, ValuationResult,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, Settings};
use crate::error::{CliError, CliResult};

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_surface(path: &Path) -> CliResult<MortalitySurface> {
    load_surface(open(path)?).map_err(|e| CliError::input(path, e))
}

pub fn read_portfolio(path: &Path) -> CliResult<Portfolio> {
    load_portfolio(open(path)?).map_err(|e| CliError::input(path, e))
}

pub fn read_params(path: &Path) -> CliResult<LeeCarterParams> {
    LeeCarterParams::from_json(&read_text(path)?).map_err(|e| CliError::input(path, e))
}

pub fn read_trend(path: &Path) -> CliResult<TrendFit> {
    TrendFit::from_json(&read_text(path)?).map_err(|e| CliError::input(path, e))
}

fn out_path(dir: &Path, name: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.join(name))
}

/// Writes through a buffered file; core writers report their own errors.
fn write_with<F>(path: &Path, body: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> longevity_core::Result<()>,
{
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|e| CliError::input(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(longevity_core::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn require<'a>(value: &'a Option<PathBuf>, what: &str) -> CliResult<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("missing {what} path")))
}

/// `fit`: Lee-Carter and trend fits of a surface.
pub fn cmd_fit(settings: &Settings) -> CliResult<Vec<PathBuf>> {
    let surface_path = require(&settings.surface, "surface")?;
    let surface = read_surface(surface_path)?;
    let params = fit_lee_carter(&surface)?;
    let fit = fit_trend(&params.kappa, params.year_min())?;
    let dir = settings.out_dir();

    let params_path = out_path(&dir, "params.json")?;
    fs::write(&params_path, params.to_json()? + "\n").map_err(|e| CliError::io(&params_path, e))?;
    let trend_path = out_path(&dir, "trend.json")?;
    fs::write(&trend_path, fit.to_json()? + "\n").map_err(|e| CliError::io(&trend_path, e))?;

    let (se_a, se_b) = fit.std_errors();
    let report = json!({
        "seed": settings.seed(),
        "ages": params.ages,
        "years": params.years,
        "sigma_eps": params.sigma_eps,
        "degenerate": params.degenerate,
        "a_hat": fit.a_hat,
        "b_hat": fit.b_hat,
        "sigma_gamma": fit.sigma_gamma,
        "sigma_t_sq_poly": fit.sigma_poly(),
        "std_errors": { "a_hat": se_a, "b_hat": se_b },
        "cov": fit.cov,
    });
    let report_path = out_path(&dir, "fit_report.json")?;
    write_json(&report_path, &report)?;
    Ok(vec![params_path, trend_path, report_path])
}

fn fitted_inputs(settings: &Settings) -> CliResult<(LeeCarterParams, TrendFit)> {
    let params = read_params(require(&settings.params, "params")?)?;
    let fit = read_trend(require(&settings.trend, "trend")?)?;
    Ok((params, fit))
}

/// `project`: trend corridor, sampled trajectories and optional surfaces.
pub fn cmd_project(settings: &Settings, n_surfaces: usize) -> CliResult<Vec<PathBuf>> {
    let (params, fit) = fitted_inputs(settings)?;
    let horizon = settings.horizon_year.unwrap_or(fit.t_big_m + 50);
    if horizon <= fit.t_big_m {
        return Err(CliError::Config(format!(
            "horizon year {horizon} must follow the last fitted year {}",
            fit.t_big_m
        )));
    }
    let confidence = settings.confidence()?;
    let variant = settings.variant.unwrap_or(SurfaceVariant::Raw);
    let seed = settings.seed();
    let n_paths = settings.paths.unwrap_or(0);
    let dir = settings.out_dir();
    let mut written = Vec::new();

    let rows = fan_chart(&fit, fit.t_m..=horizon, confidence)?;
    let fan_path = out_path(&dir, "fan.csv")?;
    write_with(&fan_path, |w| write_fan_csv(&rows, w))?;
    written.push(fan_path);

    let taus = fit.tau(fit.t_big_m + 1)..=fit.tau(horizon);
    let scenarios: Vec<_> = (0..n_paths.max(n_surfaces))
        .map(|p| draw_scenario(&fit, &mut trend_stream(seed, p as u64)))
        .collect();
    if n_paths > 0 {
        let paths_path = out_path(&dir, "paths.csv")?;
        write_with(&paths_path, |w| {
            writeln!(w, "path,tau,year,k")?;
            for (p, sc) in scenarios.iter().take(n_paths).enumerate() {
                for (tau, k) in taus.clone().zip(project_kappa(sc, taus.clone())) {
                    writeln!(w, "{p},{tau},{},{k}", fit.year(tau))?;
                }
            }
            Ok(())
        })?;
        written.push(paths_path);
    }
    for (p, sc) in scenarios.iter().take(n_surfaces).enumerate() {
        let scenario = variant.needs_scenario().then_some(sc);
        let surface = build_surface(&params, &fit, scenario, variant, horizon)?;
        let path = out_path(&dir, &format!("surface_{p}.csv"))?;
        write_with(&path, |w| save_surface(&surface, w))?;
        written.push(path);
    }

    let manifest = json!({
        "seed": seed,
        "horizon_year": horizon,
        "confidence": confidence,
        "variant": variant,
        "paths": n_paths,
        "surfaces": n_surfaces,
    });
    let manifest_path = out_path(&dir, "project.json")?;
    write_json(&manifest_path, &manifest)?;
    written.push(manifest_path);
    Ok(written)
}

#[derive(Debug, Serialize)]
struct RunReport {
    mode: Mode,
    replication: usize,
    n_scenarios: usize,
    n_inner: usize,
    mean: f64,
    std: f64,
    cv: Option<f64>,
    degenerate: bool,
    quantiles: BTreeMap<String, f64>,
    ci95_mean: (f64, f64),
    bounds95: (f64, f64),
    omega: Option<f64>,
    between: Option<f64>,
    within: Option<f64>,
    histogram: String,
}

impl RunReport {
    fn new(
        mode: Mode,
        replication: usize,
        r: &ValuationResult,
        histogram: String,
    ) -> CliResult<Self> {
        let split = match mode {
            Mode::Stochastic if r.n_scenarios >= 2 && r.n_inner >= 2 => Some(decompose(r)?),
            _ => None,
        };
        Ok(Self {
            mode,
            replication,
            n_scenarios: r.n_scenarios,
            n_inner: r.n_inner,
            mean: r.mean,
            std: r.std,
            cv: r.cv,
            degenerate: r.degenerate,
            quantiles: r
                .quantiles
                .iter()
                .map(|(p, v)| (p.to_string(), *v))
                .collect(),
            ci95_mean: r.ci95_mean,
            bounds95: r.bounds95,
            omega: split.map(|d| d.omega),
            between: split.map(|d| d.between),
            within: split.map(|d| d.within),
            histogram,
        })
    }

    fn q75(&self) -> Option<f64> {
        self.quantiles.get("0.75").copied()
    }
}

#[derive(Debug, Serialize)]
struct Comparison {
    replication: usize,
    cv_deterministic: Option<f64>,
    cv_stochastic: Option<f64>,
    cv_ratio: Option<f64>,
    q75_deterministic: Option<f64>,
    q75_stochastic: Option<f64>,
    /// Relative reserve change when the 75% quantile replaces the deterministic one.
    q75_uplift: Option<f64>,
}

#[derive(Debug, Serialize)]
struct OmegaRow {
    replication: usize,
    measured: f64,
    /// Prediction from the smallest replication's measurement.
    predicted: Option<f64>,
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}

/// `simulate`: Monte Carlo valuation per mode and replication.
pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let (params, fit) = match &cfg.fitted {
        Some((p, t)) => (read_params(p)?, read_trend(t)?),
        None => {
            let path = cfg.surface.as_deref().expect("validated");
            let params = fit_lee_carter(&read_surface(path)?)?;
            let fit = fit_trend(&params.kappa, params.year_min())?;
            (params, fit)
        }
    };
    let portfolio = read_portfolio(&cfg.portfolio)?;
    let mut written = Vec::new();
    let mut runs = Vec::new();
    for &rep in &cfg.replications {
        for &mode in cfg.mode.modes() {
            let result = run_valuation(&cfg.valuation(mode, rep), &params, &fit, &portfolio)?;
            let name = format!("histogram_{mode}_n{rep}.csv");
            let path = out_path(&cfg.out_dir, &name)?;
            write_with(&path, |w| {
                write_histogram_csv(&result.histogram(cfg.histogram_bins), w)
            })?;
            written.push(path);
            runs.push(RunReport::new(mode, rep, &result, name)?);
        }
    }

    let find =
        |mode: Mode, rep: usize| runs.iter().find(|r| r.mode == mode && r.replication == rep);
    let comparison: Vec<Comparison> = cfg
        .replications
        .iter()
        .filter_map(|&rep| {
            let (d, s) = (
                find(Mode::Deterministic, rep)?,
                find(Mode::Stochastic, rep)?,
            );
            Some(Comparison {
                replication: rep,
                cv_deterministic: d.cv,
                cv_stochastic: s.cv,
                cv_ratio: ratio(s.cv, d.cv),
                q75_deterministic: d.q75(),
                q75_stochastic: s.q75(),
                q75_uplift: ratio(s.q75(), d.q75()).map(|r| r - 1.0),
            })
        })
        .collect();

    let measured: Vec<(usize, f64)> = runs
        .iter()
        .filter(|r| r.mode == Mode::Stochastic)
        .filter_map(|r| Some((r.replication, r.omega?)))
        .collect();
    let base = measured.iter().min_by_key(|m| m.0).copied();
    let omega_table: Vec<OmegaRow> = measured
        .iter()
        .map(|&(rep, omega)| OmegaRow {
            replication: rep,
            measured: omega,
            predicted: base.and_then(|(b, w)| {
                let n = u32::try_from(rep / b).ok()?;
                (rep % b == 0 && w > 0.0)
                    .then(|| omega_n(w, n).ok())
                    .flatten()
            }),
        })
        .collect();

    let result = json!({
        "seed": cfg.seed,
        "config": {
            "discount_rate": cfg.discount_rate,
            "scenarios": cfg.scenarios,
            "inner": cfg.inner,
            "mode": cfg.mode,
            "variant": cfg.variant,
            "omega_max": cfg.omega_max,
            "replications": cfg.replications,
            "valuation_year": cfg.valuation_year.unwrap_or(fit.t_big_m + 1),
            "histogram_bins": cfg.histogram_bins,
        },
        "portfolio": {
            "members": portfolio.len(),
            "mean_age": portfolio.mean_age(),
            "total_annuity": portfolio.total_annuity(),
        },
        "runs": runs,
        "comparison": comparison,
        "omega_table": omega_table,
    });
    let result_path = out_path(&cfg.out_dir, "result.json")?;
    write_json(&result_path, &result)?;
    written.insert(0, result_path);
    Ok(written)
}

/// Inputs of one expectancy series.
#[derive(Debug, Clone)]
pub enum TableSource {
    Surface(PathBuf),
    Fitted { params: PathBuf, trend: PathBuf },
}

impl TableSource {
    fn load(
        &self,
        generations: &RangeInclusive<i32>,
        age: u32,
        omega_max: u32,
    ) -> CliResult<MortalitySurface> {
        match self {
            TableSource::Surface(p) => read_surface(p),
            TableSource::Fitted { params, trend } => {
                let params = read_params(params)?;
                let fit = read_trend(trend)?;
                let last = *generations.end() + omega_max as i32 - 1;
                let horizon = last
                    .max(fit.t_big_m + 1)
                    .max(*generations.start() + age as i32);
                Ok(build_surface(
                    &params,
                    &fit,
                    None,
                    SurfaceVariant::MeanReference,
                    horizon,
                )?)
            }
        }
    }
}

/// `expectancy`: cohort expectancy per generation and its drift.
pub fn cmd_expectancy(
    settings: &Settings,
    source: &TableSource,
    compare: Option<&TableSource>,
    age: u32,
    generations: RangeInclusive<i32>,
) -> CliResult<Vec<PathBuf>> {
    let omega_max = settings.omega_max();
    let spec = CohortSpec {
        omega_max,
        age_tail: AgeTail::HoldLast,
    };
    let series = |src: &TableSource| -> CliResult<Vec<(i32, f64)>> {
        let surface = src.load(&generations, age, omega_max)?;
        Ok(expectancy_series(
            &surface,
            age,
            generations.clone(),
            &spec,
        )?)
    };
    let first = series(source)?;
    let second = compare.map(series).transpose()?;
    let drift = |s: &[(i32, f64)]| -> CliResult<f64> {
        let e: Vec<f64> = s.iter().map(|p| p.1).collect();
        Ok(drift_of_series(&e, *generations.start())?)
    };
    let drift_first = drift(&first)?;
    let drift_second = second.as_deref().map(drift).transpose()?;

    let dir = settings.out_dir();
    let csv_path = out_path(&dir, "expectancy.csv")?;
    write_with(&csv_path, |w| {
        match &second {
            None => {
                writeln!(w, "generation,e")?;
                for (g, e) in &first {
                    writeln!(w, "{g},{e}")?;
                }
            }
            Some(other) => {
                writeln!(w, "generation,e,e_compare")?;
                for ((g, e), (_, e2)) in first.iter().zip(other) {
                    writeln!(w, "{g},{e},{e2}")?;
                }
            }
        }
        Ok(())
    })?;

    let mut report = json!({
        "seed": settings.seed(),
        "age": age,
        "generations": [generations.start(), generations.end()],
        "omega_max": omega_max,
        "drift_months_per_year": drift_first,
    });
    if let Some(d2) = drift_second {
        report["comparison"] = serde_json::to_value(DriftComparison::new(drift_first, d2))
            .map_err(longevity_core::Error::from)?;
    }
    let json_path = out_path(&dir, "expectancy.json")?;
    write_json(&json_path, &report)?;
    Ok(vec![csv_path, json_path])
}
