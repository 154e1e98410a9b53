//! Summary statistics of a sampled liability distribution.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Quantile levels reported by default.
pub const REPORT_QUANTILES: [f64; 4] = [0.5, 0.75, 0.95, 0.995];

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance (divisor `n − 1`); 0 for fewer than 2 values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (values.len() - 1) as f64
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sampled liabilities `λ_1..λ_N`, stored scenario-major so that
/// `samples[s * n_inner .. (s + 1) * n_inner]` shares one mortality scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValuationResult {
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub n_scenarios: usize,
    pub n_inner: usize,
    pub mean: f64,
    pub std: f64,
    /// `std / mean`; `None` when the mean is zero.
    pub cv: Option<f64>,
    /// Zero sample variance.
    pub degenerate: bool,
    /// `(p, value)` pairs in increasing `p`.
    pub quantiles: Vec<(f64, f64)>,
    /// Normal-approximation 95% interval for the mean.
    pub ci95_mean: (f64, f64),
    /// 2.5% and 97.5% sample quantiles of the liability itself.
    pub bounds95: (f64, f64),
}

impl ValuationResult {
    pub fn from_samples(samples: Vec<f64>, n_scenarios: usize, n_inner: usize) -> Result<Self> {
        if samples.is_empty() || samples.len() != n_scenarios * n_inner {
            return Err(Error::invalid(format!(
                "{} samples do not fill {n_scenarios} x {n_inner} groups",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite liability sample".into()));
        }
        let n = samples.len() as f64;
        let mean = mean(&samples);
        let std = sample_variance(&samples).sqrt();
        let cv = (mean != 0.0).then(|| std / mean);
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let quantiles = REPORT_QUANTILES
            .iter()
            .map(|&p| (p, quantile_sorted(&sorted, p)))
            .collect();
        let half = 1.96 * std / n.sqrt();
        Ok(Self {
            n_scenarios,
            n_inner,
            mean,
            std,
            cv,
            degenerate: std == 0.0,
            quantiles,
            ci95_mean: (mean - half, mean + half),
            bounds95: (
                quantile_sorted(&sorted, 0.025),
                quantile_sorted(&sorted, 0.975),
            ),
            samples,
        })
    }

    /// Per-scenario sub-sequences.
    pub fn grouped(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks(self.n_inner)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn std_error(&self) -> f64 {
        self.std / (self.samples.len() as f64).sqrt()
    }

    /// Quantile at any level.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        quantile_sorted(&sorted, p)
    }

    /// Equal-width histogram between the sample extremes.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, f64, u64)> {
        let bins = bins.max(1);
        let lo = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            return vec![(lo, hi, self.samples.len() as u64)];
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &v in &self.samples {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let b_lo = lo + width * i as f64;
                let b_hi = if i + 1 == bins {
                    hi
                } else {
                    lo + width * (i + 1) as f64
                };
                (b_lo, b_hi, c)
            })
            .collect()
    }
}

pub fn write_histogram_csv<W: Write>(bins: &[(f64, f64, u64)], mut out: W) -> Result<()> {
    writeln!(out, "bin_lo,bin_hi,count")?;
    for (lo, hi, c) in bins {
        writeln!(out, "{lo},{hi},{c}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_statistics() {
        let r = ValuationResult::from_samples(vec![1.0, 2.0, 3.0, 4.0], 2, 2).unwrap();
        assert_eq!(r.mean, 2.5);
        assert!((r.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((r.cv.unwrap() - r.std / 2.5).abs() < 1e-15);
        assert_eq!(r.quantiles[0], (0.5, 2.5));
        assert_eq!(r.quantiles[1], (0.75, 3.25));
        assert_eq!(
            r.grouped().collect::<Vec<_>>(),
            vec![&[1.0, 2.0][..], &[3.0, 4.0][..]]
        );
        assert!(r.quantiles.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn zero_mean_is_degenerate() {
        let r = ValuationResult::from_samples(vec![0.0; 10], 1, 10).unwrap();
        assert_eq!(r.cv, None);
        assert!(r.degenerate);
        assert_eq!(r.histogram(5), vec![(0.0, 0.0, 10)]);
    }

    #[test]
    fn layout_mismatch_rejected() {
        assert!(ValuationResult::from_samples(vec![1.0; 5], 2, 2).is_err());
        assert!(ValuationResult::from_samples(vec![], 0, 0).is_err());
    }

    #[test]
    fn histogram_counts_everything() {
        let samples: Vec<f64> = (0..100).map(f64::from).collect();
        let r = ValuationResult::from_samples(samples, 1, 100).unwrap();
        let h = r.histogram(7);
        assert_eq!(h.len(), 7);
        assert_eq!(h.iter().map(|b| b.2).sum::<u64>(), 100);
        assert_eq!(h[0].0, 0.0);
        assert_eq!(h[6].1, 99.0);
        let mut buf = Vec::new();
        write_histogram_csv(&h, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("bin_lo,bin_hi,count\n0,"));
    }

    #[test]
    fn compensation_helps() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
