//! Curtate lifetimes and the discounted liability of one realisation.

use rand::Rng;

use crate::surface::CohortRateVector;
use crate::valuation::portfolio::Portfolio;

/// Year-by-year survival walk: the member survives year `k` with
/// probability `1 − q_k`. Returns whole years completed per member.
pub fn simulate_lifetimes<R: Rng + ?Sized>(cohorts: &[CohortRateVector], rng: &mut R) -> Vec<u32> {
    cohorts
        .iter()
        .map(|c| {
            let mut k = 0u32;
            for &q in &c.q {
                if q >= 1.0 || rng.random::<f64>() < q {
                    break;
                }
                k += 1;
            }
            k
        })
        .collect()
}

/// Inverse-CDF sampler for the curtate lifetime implied by a q-vector.
///
/// Same law as [`simulate_lifetimes`] with one uniform per member.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeSampler {
    /// `cdf[k] = P(K ≤ k)`; the last entry is exactly 1.
    cdf: Vec<f64>,
}

impl LifetimeSampler {
    pub fn new(q: &[f64]) -> Self {
        let mut survival = 1.0;
        let mut cdf: Vec<f64> = q
            .iter()
            .map(|&qk| {
                survival *= 1.0 - qk.clamp(0.0, 1.0);
                1.0 - survival
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Self { cdf }
    }

    /// Largest possible lifetime.
    pub fn max_years(&self) -> u32 {
        self.cdf.len().saturating_sub(1) as u32
    }

    /// `P(K = k)` for every `k`.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cdf
            .iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    /// Maps a uniform `u ∈ [0, 1)` to the smallest `k` with `u < P(K ≤ k)`.
    pub fn sample_uniform(&self, u: f64) -> u32 {
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1) as u32
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.sample_uniform(rng.random())
    }
}

/// `a_K = Σ_{t=1..K} v^t` for every `K` up to `max_years`.
pub fn annuity_certain_table(discount_rate: f64, max_years: u32) -> Vec<f64> {
    let v = 1.0 / (1.0 + discount_rate);
    let mut table = Vec::with_capacity(max_years as usize + 1);
    let (mut acc, mut vt) = (0.0, 1.0);
    table.push(0.0);
    for _ in 0..max_years {
        vt *= v;
        acc += vt;
        table.push(acc);
    }
    table
}

/// Present value `Σ_j r_j Σ_{t=1..K_j} (1+i)^{−t}` of one lifetime draw.
pub fn liability(lifetimes: &[u32], portfolio: &Portfolio, discount_rate: f64) -> f64 {
    let max_k = lifetimes.iter().copied().max().unwrap_or(0);
    let table = annuity_certain_table(discount_rate, max_k);
    portfolio
        .members()
        .iter()
        .zip(lifetimes)
        .map(|(m, &k)| m.annuity * table[k as usize])
        .sum()
}
