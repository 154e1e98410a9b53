//! Synthetic inputs for demos and tests: a Gompertz-shaped Lee-Carter
//! surface with a noisy affine period index, and an annuitant book with
//! chosen average age and annuity.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::leecarter::LeeCarterParams;
use crate::rng::substream;
use crate::surface::MortalitySurface;
use crate::valuation::portfolio::{Member, Portfolio};

const DOMAIN_SYNTH: u64 = 0x7379_6e74_0000_0003;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSurfaceSpec {
    pub ages: (u32, u32),
    pub years: (i32, i32),
    /// Rate at age 60 before the period effect.
    pub level_at_60: f64,
    /// Gompertz slope of `ln μ` per year of age.
    pub gompertz_slope: f64,
    /// Unnormalised age sensitivity at the first and last age; linear in between.
    pub beta_ends: (f64, f64),
    /// Slope and intercept of the period index in `τ = t − t_m + 1`.
    pub trend: (f64, f64),
    /// Residual scale of the period index around its line.
    pub sigma_gamma: f64,
    /// Cell-level log noise.
    pub sigma_eps: f64,
    pub seed: u64,
}

impl Default for SyntheticSurfaceSpec {
    /// Magnitudes in the range of a national female table over 1959-2005.
    fn default() -> Self {
        Self {
            ages: (30, 110),
            years: (1959, 2005),
            level_at_60: 0.004,
            gompertz_slope: 0.10,
            beta_ends: (1.6, 0.6),
            trend: (-2.05775, 49.38604),
            sigma_gamma: 3.982_278_82,
            sigma_eps: 0.0,
            seed: 1,
        }
    }
}

/// Generating parameters and the surface they produce.
#[derive(Debug, Clone)]
pub struct SyntheticSurface {
    pub truth: LeeCarterParams,
    pub surface: MortalitySurface,
}

pub fn lee_carter_surface(spec: &SyntheticSurfaceSpec) -> Result<SyntheticSurface> {
    let (a0, a1) = spec.ages;
    let (y0, y1) = spec.years;
    if a1 <= a0 || y1 < y0 + 2 {
        return Err(Error::invalid(
            "synthetic surface needs >= 2 ages and >= 3 years",
        ));
    }
    let n_ages = (a1 - a0 + 1) as usize;
    let n_years = (y1 - y0 + 1) as usize;
    let mut rng = substream(spec.seed, DOMAIN_SYNTH, 0, 0);
    let gamma = Normal::new(0.0, spec.sigma_gamma).map_err(|e| Error::invalid(e.to_string()))?;
    let eps = Normal::new(0.0, spec.sigma_eps).map_err(|e| Error::invalid(e.to_string()))?;

    let raw_beta: Vec<f64> = (0..n_ages)
        .map(|i| {
            let w = i as f64 / (n_ages - 1) as f64;
            spec.beta_ends.0 + w * (spec.beta_ends.1 - spec.beta_ends.0)
        })
        .collect();
    let beta_sum: f64 = raw_beta.iter().sum();
    let beta: Vec<f64> = raw_beta.iter().map(|b| b / beta_sum).collect();

    let mut kappa: Vec<f64> = (1..=n_years)
        .map(|tau| spec.trend.0 * tau as f64 + spec.trend.1 + gamma.sample(&mut rng))
        .collect();
    let k_mean = kappa.iter().sum::<f64>() / n_years as f64;
    kappa.iter_mut().for_each(|k| *k -= k_mean);

    let alpha: Vec<f64> = (0..n_ages)
        .map(|i| {
            let age = f64::from(a0) + i as f64;
            spec.level_at_60.ln() + spec.gompertz_slope * (age - 60.0) + beta[i] * k_mean
        })
        .collect();

    let mut rates = Vec::with_capacity(n_ages * n_years);
    for i in 0..n_ages {
        for &k in &kappa {
            rates.push((alpha[i] + beta[i] * k + eps.sample(&mut rng)).exp());
        }
    }
    let surface = MortalitySurface::new(a0, y0, n_ages, n_years, rates)?;
    Ok(SyntheticSurface {
        truth: LeeCarterParams {
            alpha,
            beta,
            kappa,
            sigma_eps: spec.sigma_eps,
            ages: [a0, a1],
            years: [y0, y1],
            degenerate: false,
        },
        surface,
    })
}

/// Annuitant book with ages in `[min_age, max_age]` whose mean age and mean
/// annuity are hit as closely as integer ages allow.
pub fn portfolio(
    size: usize,
    mean_age: f64,
    mean_annuity: f64,
    (min_age, max_age): (u32, u32),
    seed: u64,
) -> Result<Portfolio> {
    if size == 0 || !(f64::from(min_age) <= mean_age && mean_age <= f64::from(max_age)) {
        return Err(Error::invalid("mean age must lie within the age bounds"));
    }
    let mut rng = substream(seed, DOMAIN_SYNTH, 1, 0);
    let spread = Exp::new(1.0 / (mean_age - f64::from(min_age)).max(0.5))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut ages: Vec<u32> = (0..size)
        .map(|_| {
            let a = f64::from(min_age) + spread.sample(&mut rng);
            (a.round() as u32).clamp(min_age, max_age)
        })
        .collect();
    let target = (mean_age * size as f64).round() as i64;
    let mut total: i64 = ages.iter().map(|&a| i64::from(a)).sum();
    while total != target {
        let j = rng.random_range(0..size);
        if total < target && ages[j] < max_age {
            ages[j] += 1;
            total += 1;
        } else if total > target && ages[j] > min_age {
            ages[j] -= 1;
            total -= 1;
        }
    }
    let amount = LogNormal::new(0.0, 0.5).map_err(|e| Error::invalid(e.to_string()))?;
    let raw: Vec<f64> = (0..size).map(|_| amount.sample(&mut rng)).collect();
    let scale = mean_annuity * size as f64 / raw.iter().sum::<f64>();
    let members = ages
        .into_iter()
        .zip(raw)
        .enumerate()
        .map(|(j, (age, r))| Member {
            id: format!("P{:04}", j + 1),
            age,
            annuity: (r * scale * 100.0).round() / 100.0,
        })
        .collect();
    Portfolio::new(members)
}

/// 374 lives, mean age 63.8, mean annuity 5 500.
pub fn reference_portfolio(seed: u64) -> Result<Portfolio> {
    portfolio(374, 63.8, 5_500.0, (55, 95), seed)
}
