//! Affine trend of the period index and its estimation uncertainty.
//!
//! The index `k_τ` is regressed on `τ = t − t_m + 1`. The OLS pair `(â, b̂)`
//! is Gaussian with covariance
//!
//! ```text
//! Σ = 12σ_γ² / (T(T²−1)) · [ 1         −(T+1)/2        ]
//!                          [ −(T+1)/2  (T+1)(2T+1)/6   ]
//! ```
//!
//! so the fitted line at `τ` has variance
//! `σ_τ² = c(τ² − τ(T+1) + (T+1)(2T+1)/6)` with `c = 12σ_γ²/(T(T²−1))`.
//! Scenarios redraw `(a*, b*)` from that law and project straight lines.

use std::io::Write;
use std::ops::RangeInclusive;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::leecarter::LeeCarterParams;
use crate::surface::MortalitySurface;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TrendFitDoc", try_from = "TrendFitDoc")]
pub struct TrendFit {
    pub a_hat: f64,
    pub b_hat: f64,
    pub sigma_gamma: f64,
    pub t_m: i32,
    pub t_big_m: i32,
    /// Number of fitted years, `t_M − t_m + 1`.
    pub n: usize,
    pub k_bar: f64,
    /// Covariance of `(â, b̂)`.
    pub cov: [[f64; 2]; 2],
}

/// On-disk form of a [`TrendFit`]; derived fields are recomputed on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrendFitDoc {
    a_hat: f64,
    b_hat: f64,
    sigma_gamma: f64,
    t_m: i32,
    #[serde(rename = "t_M")]
    t_big_m: i32,
}

impl From<TrendFit> for TrendFitDoc {
    fn from(f: TrendFit) -> Self {
        Self {
            a_hat: f.a_hat,
            b_hat: f.b_hat,
            sigma_gamma: f.sigma_gamma,
            t_m: f.t_m,
            t_big_m: f.t_big_m,
        }
    }
}

impl TryFrom<TrendFitDoc> for TrendFit {
    type Error = Error;

    fn try_from(d: TrendFitDoc) -> Result<Self> {
        TrendFit::from_parts(d.a_hat, d.b_hat, d.sigma_gamma, d.t_m, d.t_big_m)
    }
}

/// Scale factor `12σ²/(T(T²−1))` shared by Σ and σ_τ².
fn cov_scale(sigma_gamma: f64, n: usize) -> f64 {
    let t = n as f64;
    12.0 * sigma_gamma * sigma_gamma / (t * (t * t - 1.0))
}

fn covariance(sigma_gamma: f64, n: usize) -> [[f64; 2]; 2] {
    let t = n as f64;
    let var_a = cov_scale(sigma_gamma, n);
    let cov_ab = -var_a * (t + 1.0) / 2.0;
    let var_b = var_a * (t + 1.0) * (2.0 * t + 1.0) / 6.0;
    [[var_a, cov_ab], [cov_ab, var_b]]
}

impl TrendFit {
    /// Rebuilds a fit from its five stored quantities.
    pub fn from_parts(
        a_hat: f64,
        b_hat: f64,
        sigma_gamma: f64,
        t_m: i32,
        t_big_m: i32,
    ) -> Result<Self> {
        if !(a_hat.is_finite() && b_hat.is_finite()) {
            return Err(Error::invalid("trend coefficients must be finite"));
        }
        if !(sigma_gamma.is_finite() && sigma_gamma >= 0.0) {
            return Err(Error::invalid(
                "sigma_gamma must be finite and non-negative",
            ));
        }
        let span = i64::from(t_big_m) - i64::from(t_m) + 1;
        if span < 3 {
            return Err(Error::invalid(format!(
                "trend needs at least 3 fitted years, got [{t_m}, {t_big_m}]"
            )));
        }
        let n = span as usize;
        Ok(Self {
            a_hat,
            b_hat,
            sigma_gamma,
            t_m,
            t_big_m,
            n,
            k_bar: b_hat + a_hat * (n as f64 + 1.0) / 2.0,
            cov: covariance(sigma_gamma, n),
        })
    }

    /// `τ` index of a calendar year.
    pub fn tau(&self, year: i32) -> i64 {
        i64::from(year) - i64::from(self.t_m) + 1
    }

    pub fn year(&self, tau: i64) -> i64 {
        tau + i64::from(self.t_m) - 1
    }

    /// Fitted line `âτ + b̂`.
    pub fn k_hat(&self, tau: i64) -> f64 {
        self.a_hat * tau as f64 + self.b_hat
    }

    /// Coefficients `(c₂, c₁, c₀)` of `σ_τ² = c₂τ² + c₁τ + c₀`.
    pub fn sigma_poly(&self) -> [f64; 3] {
        let t = self.n as f64;
        let c = cov_scale(self.sigma_gamma, self.n);
        [c, -c * (t + 1.0), c * (t + 1.0) * (2.0 * t + 1.0) / 6.0]
    }

    /// Standard deviations of `â` and `b̂`.
    pub fn std_errors(&self) -> (f64, f64) {
        (self.cov[0][0].sqrt(), self.cov[1][1].sqrt())
    }

    /// Lower-triangular factor `L` with `L Lᵀ = Σ`.
    pub fn cov_sqrt(&self) -> [[f64; 2]; 2] {
        let l11 = self.cov[0][0].sqrt();
        if l11 == 0.0 {
            return [[0.0; 2]; 2];
        }
        let l21 = self.cov[1][0] / l11;
        let l22 = (self.cov[1][1] - l21 * l21).max(0.0).sqrt();
        [[l11, 0.0], [l21, l22]]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Closed-form OLS of `k` on `τ = 1..T`, for years `t_m..t_m+T−1`.
pub fn fit_trend(kappa: &[f64], t_m: i32) -> Result<TrendFit> {
    let n = kappa.len();
    if n < 3 {
        return Err(Error::invalid(format!(
            "trend fit needs at least 3 points, got {n}"
        )));
    }
    if kappa.iter().any(|k| !k.is_finite()) {
        return Err(Error::invalid("kappa contains non-finite values"));
    }
    let t_big_m = i32::try_from(n - 1)
        .ok()
        .and_then(|d| t_m.checked_add(d))
        .ok_or_else(|| Error::invalid("year range overflows"))?;
    let t = n as f64;
    let k_bar = kappa.iter().sum::<f64>() / t;
    let tau_k = kappa
        .iter()
        .enumerate()
        .map(|(i, k)| (i + 1) as f64 * k)
        .sum::<f64>()
        / t;
    let a_hat = (tau_k - (t + 1.0) / 2.0 * k_bar) / ((t * t - 1.0) / 12.0);
    let b_hat = k_bar - a_hat * (t + 1.0) / 2.0;
    let sse: f64 = kappa
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let r = k - (a_hat * (i + 1) as f64 + b_hat);
            r * r
        })
        .sum();
    let sigma_gamma = (sse / (t - 2.0)).sqrt();
    Ok(TrendFit {
        a_hat,
        b_hat,
        sigma_gamma,
        t_m,
        t_big_m,
        n,
        k_bar,
        cov: covariance(sigma_gamma, n),
    })
}

/// Variance of the fitted line at index `tau`.
pub fn sigma_t_sq(fit: &TrendFit, tau: i64) -> f64 {
    let [c2, c1, c0] = fit.sigma_poly();
    let tau = tau as f64;
    (c2 * tau * tau + c1 * tau + c0).max(0.0)
}

/// One draw of the trend coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendScenario {
    pub a_star: f64,
    pub b_star: f64,
}

impl TrendScenario {
    /// The point estimate itself.
    pub fn central(fit: &TrendFit) -> Self {
        Self {
            a_star: fit.a_hat,
            b_star: fit.b_hat,
        }
    }

    pub fn k(&self, tau: i64) -> f64 {
        self.a_star * tau as f64 + self.b_star
    }
}

/// Draws `(a*, b*) ~ N((â, b̂), Σ)` through the Cholesky factor of Σ.
pub fn draw_scenario<R: Rng + ?Sized>(fit: &TrendFit, rng: &mut R) -> TrendScenario {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let l = fit.cov_sqrt();
    TrendScenario {
        a_star: fit.a_hat + l[0][0] * z1,
        b_star: fit.b_hat + l[1][0] * z1 + l[1][1] * z2,
    }
}

/// Straight-line projection `k*_τ = a*τ + b*`; no year-to-year noise is added.
pub fn project_kappa(scenario: &TrendScenario, taus: RangeInclusive<i64>) -> Vec<f64> {
    taus.map(|tau| scenario.k(tau)).collect()
}

/// How projected rates are formed from a trend draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceVariant {
    /// `exp(α + βk*)`.
    Raw,
    /// `exp(α − β²σ_τ²/2 + βk*)`, whose expectation is the Lee-Carter rate.
    BiasCorrected,
    /// `exp(α + βk̂ + β²σ_τ²/2)`, the expectation of [`SurfaceVariant::Raw`].
    MeanReference,
}

impl SurfaceVariant {
    pub fn needs_scenario(self) -> bool {
        !matches!(self, SurfaceVariant::MeanReference)
    }
}

impl std::str::FromStr for SurfaceVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "bias_corrected" | "bias-corrected" => Ok(Self::BiasCorrected),
            "mean_reference" | "mean-reference" => Ok(Self::MeanReference),
            other => Err(Error::invalid(format!("unknown surface variant {other:?}"))),
        }
    }
}

impl std::fmt::Display for SurfaceVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Raw => "raw",
            Self::BiasCorrected => "bias_corrected",
            Self::MeanReference => "mean_reference",
        })
    }
}

/// Builds a surface over `t_m..=horizon_year`: the Lee-Carter reconstruction
/// up to `t_M`, then the projected variant.
pub fn build_surface(
    params: &LeeCarterParams,
    fit: &TrendFit,
    scenario: Option<&TrendScenario>,
    variant: SurfaceVariant,
    horizon_year: i32,
) -> Result<MortalitySurface> {
    if params.year_min() != fit.t_m || params.year_max() != fit.t_big_m {
        return Err(Error::invalid(format!(
            "trend years [{}, {}] do not match params years {:?}",
            fit.t_m, fit.t_big_m, params.years
        )));
    }
    if horizon_year <= fit.t_big_m {
        return Err(Error::invalid(format!(
            "horizon {horizon_year} must be after the last fitted year {}",
            fit.t_big_m
        )));
    }
    let drawn = match (variant.needs_scenario(), scenario) {
        (true, Some(s)) => Some(*s),
        (false, None) => None,
        (true, None) => {
            return Err(Error::invalid(format!(
                "variant {variant} requires a scenario"
            )))
        }
        (false, Some(_)) => {
            return Err(Error::invalid(format!(
                "variant {variant} takes no scenario"
            )))
        }
    };

    let n_years = (horizon_year - fit.t_m + 1) as usize;
    let fitted = params.n_years();
    // Per-year (k, σ_τ²) for the projected part.
    let projected: Vec<(f64, f64)> = (fitted..n_years)
        .map(|iy| {
            let tau = iy as i64 + 1;
            let k = match drawn {
                Some(s) => s.k(tau),
                None => fit.k_hat(tau),
            };
            (k, sigma_t_sq(fit, tau))
        })
        .collect();

    let mut rates = Vec::with_capacity(params.n_ages() * n_years);
    for ia in 0..params.n_ages() {
        let (alpha, beta) = (params.alpha[ia], params.beta[ia]);
        rates.extend(params.kappa.iter().map(|&k| params.log_rate(ia, k).exp()));
        rates.extend(projected.iter().map(|&(k, s2)| {
            let adj = beta * beta * s2 / 2.0;
            let log_mu = match variant {
                SurfaceVariant::Raw => alpha + beta * k,
                SurfaceVariant::BiasCorrected => alpha - adj + beta * k,
                SurfaceVariant::MeanReference => alpha + beta * k + adj,
            };
            log_mu.exp()
        }));
    }
    MortalitySurface::new(params.age_min(), fit.t_m, params.n_ages(), n_years, rates)
}

/// One row of the trend corridor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FanRow {
    pub tau: i64,
    pub year: i64,
    pub k_mean: f64,
    pub k_lo: f64,
    pub k_hi: f64,
}

/// Two-sided normal quantile for a central `confidence` band.
pub fn normal_band_z(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let std = Normal::standard();
    Ok(std.inverse_cdf(0.5 + confidence / 2.0))
}

/// Corridor `k̂_τ ± z·σ_τ` over `years`.
pub fn fan_chart(
    fit: &TrendFit,
    years: RangeInclusive<i32>,
    confidence: f64,
) -> Result<Vec<FanRow>> {
    let z = normal_band_z(confidence)?;
    Ok(years
        .map(|year| {
            let tau = fit.tau(year);
            let mean = fit.k_hat(tau);
            let half = z * sigma_t_sq(fit, tau).sqrt();
            FanRow {
                tau,
                year: i64::from(year),
                k_mean: mean,
                k_lo: mean - half,
                k_hi: mean + half,
            }
        })
        .collect())
}

pub fn write_fan_csv<W: Write>(rows: &[FanRow], mut out: W) -> Result<()> {
    writeln!(out, "tau,year,k_mean,k_lo,k_hi")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.tau, r.year, r.k_mean, r.k_lo, r.k_hi
        )?;
    }
    out.flush()?;
    Ok(())
}
