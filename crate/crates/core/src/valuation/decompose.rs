//! Split of liability variance into a systematic (between-scenario) part
//! and a mutualisable (within-scenario) part.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::valuation::stats::{mean, sample_variance, ValuationResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceDecomposition {
    /// `V[E(Λ|Π)]`, corrected for the sampling noise of the group means.
    pub between: f64,
    /// `E[V(Λ|Π)]`.
    pub within: f64,
    /// Share of variance carried by the scenario, clamped to `[0, 1]`.
    pub omega: f64,
    /// Variance of the group means before the noise correction.
    pub raw_between: f64,
}

/// One-way ANOVA on equally sized scenario groups.
///
/// `between = Var(group means) − within / n_inner` (floored at 0),
/// `within = mean of group variances`.
pub fn decompose(result: &ValuationResult) -> Result<VarianceDecomposition> {
    if result.n_scenarios < 2 || result.n_inner < 2 {
        return Err(Error::invalid(format!(
            "decomposition needs >= 2 scenarios of >= 2 samples, got {} x {}",
            result.n_scenarios, result.n_inner
        )));
    }
    let means: Vec<f64> = result.grouped().map(mean).collect();
    let vars: Vec<f64> = result.grouped().map(sample_variance).collect();
    let within = mean(&vars);
    let raw_between = sample_variance(&means);
    let between = (raw_between - within / result.n_inner as f64).max(0.0);
    let total = between + within;
    let omega = if total > 0.0 {
        (between / total).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(VarianceDecomposition {
        between,
        within,
        omega,
        raw_between,
    })
}

/// Systematic share after replicating the portfolio `n` times:
/// `ω_n = (1 + (1/n)(1/ω − 1))⁻¹`.
pub fn omega_n(omega: f64, n: u32) -> Result<f64> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::invalid(format!(
            "omega must lie in (0, 1], got {omega}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("replication factor must be at least 1"));
    }
    Ok(1.0 / (1.0 + (1.0 / omega - 1.0) / f64::from(n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_split() {
        // Groups [1, 2, 3] and [4, 6, 8]: means 2 and 6, variances 1 and 4.
        let r = ValuationResult::from_samples(vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0], 2, 3).unwrap();
        let d = decompose(&r).unwrap();
        assert!((d.within - 2.5).abs() < 1e-12);
        assert!((d.raw_between - 8.0).abs() < 1e-12);
        assert!((d.between - (8.0 - 2.5 / 3.0)).abs() < 1e-12);
        assert!((d.omega - (8.0 - 2.5 / 3.0) / (8.0 - 2.5 / 3.0 + 2.5)).abs() < 1e-12);
    }

    #[test]
    fn identical_groups_give_zero() {
        let r = ValuationResult::from_samples(vec![1.0, 3.0, 1.0, 3.0, 1.0, 3.0], 3, 2).unwrap();
        let d = decompose(&r).unwrap();
        assert_eq!(d.between, 0.0);
        assert_eq!(d.omega, 0.0);
    }

    #[test]
    fn separated_groups_approach_one() {
        let mut s = Vec::new();
        for g in 0..4 {
            for i in 0..1000 {
                s.push(1000.0 * g as f64 + if i % 2 == 0 { 0.01 } else { -0.01 });
            }
        }
        let r = ValuationResult::from_samples(s, 4, 1000).unwrap();
        assert!(decompose(&r).unwrap().omega > 0.999_999);
    }

    #[test]
    fn insufficient_grouping() {
        let r = ValuationResult::from_samples(vec![1.0, 2.0, 3.0], 1, 3).unwrap();
        assert!(decompose(&r).is_err());
        let r = ValuationResult::from_samples(vec![1.0, 2.0, 3.0], 3, 1).unwrap();
        assert!(decompose(&r).is_err());
    }

    #[test]
    fn omega_n_examples() {
        assert!((omega_n(0.5, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((omega_n(0.2, 4).unwrap() - 0.5).abs() < 1e-15);
        assert!((omega_n(0.999_999, 10).unwrap() - 1.0).abs() < 1e-6);
        assert!(omega_n(0.0, 3).is_err());
        assert!(omega_n(1.5, 3).is_err());
        assert!(omega_n(0.5, 0).is_err());
        let w: Vec<f64> = (1..50).map(|n| omega_n(0.05, n).unwrap()).collect();
        assert!(w.windows(2).all(|p| p[1] > p[0]));
    }
}
