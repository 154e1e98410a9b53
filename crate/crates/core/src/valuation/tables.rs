//! Cohort life expectancies, annuity factors and expectancy drift.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::surface::{cohort_view, CohortSpec, MortalitySurface};
use crate::trend::fit_trend;

/// Curtate expectation `Σ_{k≥1} Π_{m<k} (1 − q_m)`.
pub fn curtate_expectancy(q: &[f64]) -> f64 {
    let mut survival = 1.0;
    let mut e = 0.0;
    for &qm in q {
        survival *= 1.0 - qm;
        e += survival;
    }
    e
}

/// Unit annuity in arrears `Σ_{t≥1} (1+i)^{−t} Π_{m<t} (1 − q_m)`.
pub fn annuity_factor_from_q(q: &[f64], discount_rate: f64) -> f64 {
    let v = 1.0 / (1.0 + discount_rate);
    let (mut survival, mut vt, mut a) = (1.0, 1.0, 0.0);
    for &qm in q {
        survival *= 1.0 - qm;
        vt *= v;
        a += vt * survival;
    }
    a
}

pub fn life_expectancy(
    surface: &MortalitySurface,
    age: u32,
    generation: i32,
    spec: &CohortSpec,
) -> Result<f64> {
    Ok(curtate_expectancy(
        &cohort_view(surface, generation, age, spec)?.q,
    ))
}

pub fn annuity_factor(
    surface: &MortalitySurface,
    age: u32,
    generation: i32,
    discount_rate: f64,
    spec: &CohortSpec,
) -> Result<f64> {
    check_rate(discount_rate)?;
    Ok(annuity_factor_from_q(
        &cohort_view(surface, generation, age, spec)?.q,
        discount_rate,
    ))
}

pub(crate) fn check_rate(discount_rate: f64) -> Result<()> {
    if discount_rate.is_finite() && discount_rate >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "discount rate must be finite and non-negative, got {discount_rate}"
        )))
    }
}

/// Expectancy at `age` for each generation in the range.
pub fn expectancy_series(
    surface: &MortalitySurface,
    age: u32,
    generations: RangeInclusive<i32>,
    spec: &CohortSpec,
) -> Result<Vec<(i32, f64)>> {
    generations
        .map(|g| Ok((g, life_expectancy(surface, age, g, spec)?)))
        .collect()
}

/// OLS slope of cohort expectancy against generation, in months per year.
pub fn expectancy_drift(
    surface: &MortalitySurface,
    age: u32,
    generations: RangeInclusive<i32>,
    spec: &CohortSpec,
) -> Result<f64> {
    let first = *generations.start();
    let series = expectancy_series(surface, age, generations, spec)?;
    drift_of_series(&series.iter().map(|s| s.1).collect::<Vec<_>>(), first)
}

/// Slope (×12) of a series on consecutive generations starting at `first`.
pub fn drift_of_series(expectancies: &[f64], first: i32) -> Result<f64> {
    if expectancies.len() < 3 {
        return Err(Error::invalid(format!(
            "drift needs at least 3 generations, got {}",
            expectancies.len()
        )));
    }
    Ok(fit_trend(expectancies, first)?.a_hat * 12.0)
}

/// Two drifts and their relative gap under both base conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftComparison {
    pub first: f64,
    pub second: f64,
    /// `(second − first) / first`.
    pub gap_vs_first: f64,
    /// `(second − first) / second`.
    pub gap_vs_second: f64,
}

impl DriftComparison {
    pub fn new(first: f64, second: f64) -> Self {
        let diff = second - first;
        Self {
            first,
            second,
            gap_vs_first: diff / first,
            gap_vs_second: diff / second,
        }
    }
}
