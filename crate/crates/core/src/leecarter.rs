//! Lee-Carter decomposition `ln μ(x,t) = α_x + β_x k_t + ε(x,t)`.
//!
//! Fitted by rank-1 least squares (leading singular pair) on the row-centred
//! log surface, then normalised so that `Σβ = 1` and `Σk = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi_svd;
use crate::surface::MortalitySurface;

/// Tolerance used when validating the identifiability constraints of
/// externally supplied parameters.
const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeeCarterParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub sigma_eps: f64,
    /// First and last age of the fitted surface.
    pub ages: [u32; 2],
    /// First and last calendar year of the fitted surface.
    pub years: [i32; 2],
    /// Set when the surface carried no time variation to factor.
    #[serde(default)]
    pub degenerate: bool,
}

impl LeeCarterParams {
    pub fn n_ages(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_years(&self) -> usize {
        self.kappa.len()
    }

    pub fn age_min(&self) -> u32 {
        self.ages[0]
    }

    pub fn year_min(&self) -> i32 {
        self.years[0]
    }

    pub fn year_max(&self) -> i32 {
        self.years[1]
    }

    /// Checks lengths, finiteness and the `Σβ = 1`, `Σk = 0` constraints.
    pub fn validate(&self) -> Result<()> {
        let span_ages = i64::from(self.ages[1]) - i64::from(self.ages[0]) + 1;
        let span_years = i64::from(self.years[1]) - i64::from(self.years[0]) + 1;
        if span_ages < 2 || span_years < 2 {
            return Err(Error::invalid("params need at least 2 ages and 2 years"));
        }
        if self.alpha.len() as i64 != span_ages || self.beta.len() as i64 != span_ages {
            return Err(Error::invalid(format!(
                "alpha/beta lengths ({}, {}) do not match age range {:?}",
                self.alpha.len(),
                self.beta.len(),
                self.ages
            )));
        }
        if self.kappa.len() as i64 != span_years {
            return Err(Error::invalid(format!(
                "kappa length {} does not match year range {:?}",
                self.kappa.len(),
                self.years
            )));
        }
        let all = self.alpha.iter().chain(&self.beta).chain(&self.kappa);
        if !all.clone().all(|v| v.is_finite()) {
            return Err(Error::invalid("params contain non-finite values"));
        }
        if !(self.sigma_eps.is_finite() && self.sigma_eps >= 0.0) {
            return Err(Error::invalid("sigma_eps must be finite and non-negative"));
        }
        let sum_beta: f64 = self.beta.iter().sum();
        if (sum_beta - 1.0).abs() > CONSTRAINT_TOL {
            return Err(Error::invalid(format!("beta sums to {sum_beta}, not 1")));
        }
        let sum_k: f64 = self.kappa.iter().sum();
        let scale: f64 = self.kappa.iter().map(|k| k.abs()).sum::<f64>().max(1.0);
        if sum_k.abs() > CONSTRAINT_TOL * scale {
            return Err(Error::invalid(format!("kappa sums to {sum_k}, not 0")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a params document.
    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    /// `α_x + β_x k` for grid age index `ia`.
    pub fn log_rate(&self, ia: usize, k: f64) -> f64 {
        self.alpha[ia] + self.beta[ia] * k
    }
}

/// Fits the Lee-Carter decomposition to a complete surface.
///
/// A surface with no time variation yields `k = 0`, uniform `β` and the
/// `degenerate` flag rather than an error.
pub fn fit_lee_carter(surface: &MortalitySurface) -> Result<LeeCarterParams> {
    let (n_ages, n_years) = (surface.n_ages(), surface.n_years());
    let log: Vec<Vec<f64>> = (0..n_ages)
        .map(|i| (0..n_years).map(|j| surface.at(i, j).ln()).collect())
        .collect();
    let mut alpha: Vec<f64> = log
        .iter()
        .map(|row| row.iter().sum::<f64>() / n_years as f64)
        .collect();
    // Columns of the centred matrix, one per year.
    let centred: Vec<Vec<f64>> = (0..n_years)
        .map(|j| (0..n_ages).map(|i| log[i][j] - alpha[i]).collect())
        .collect();

    let scale = 1.0 + log.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let svd = jacobi_svd(centred);
    let lead = svd
        .leading()
        .ok_or_else(|| Error::Degenerate("empty singular spectrum".into()))?;
    let s1 = svd.s[lead];

    let ages = [surface.age_min(), surface.age_max()];
    let years = [surface.year_min(), surface.year_max()];

    if s1.is_nan() || s1 <= 1e-12 * scale {
        return Ok(LeeCarterParams {
            alpha,
            beta: vec![1.0 / n_ages as f64; n_ages],
            kappa: vec![0.0; n_years],
            sigma_eps: 0.0,
            ages,
            years,
            degenerate: true,
        });
    }

    let u = &svd.u[lead];
    let v = &svd.v[lead];
    let sum_u: f64 = u.iter().sum();
    if sum_u.abs() < 1e-10 * (n_ages as f64).sqrt() {
        return Err(Error::Degenerate(
            "age loadings sum to zero, cannot normalise to sum(beta) = 1".into(),
        ));
    }

    let mut beta: Vec<f64> = u.iter().map(|b| b / sum_u).collect();
    let mut kappa: Vec<f64> = v.iter().map(|v| v * s1 * sum_u).collect();

    // Push rounding residue of Σk into α so the fitted surface is unchanged.
    let k_mean = kappa.iter().sum::<f64>() / n_years as f64;
    for k in &mut kappa {
        *k -= k_mean;
    }
    for (a, b) in alpha.iter_mut().zip(&beta) {
        *a += b * k_mean;
    }
    let beta_sum: f64 = beta.iter().sum();
    for b in &mut beta {
        *b /= beta_sum;
    }
    for k in &mut kappa {
        *k *= beta_sum;
    }

    let mut sse = 0.0;
    for i in 0..n_ages {
        for j in 0..n_years {
            let r = log[i][j] - alpha[i] - beta[i] * kappa[j];
            sse += r * r;
        }
    }
    let dof = (n_ages * n_years) as i64 - n_ages as i64 - n_years as i64;
    let sigma_eps = if dof > 0 {
        (sse / dof as f64).sqrt()
    } else {
        0.0
    };

    Ok(LeeCarterParams {
        alpha,
        beta,
        kappa,
        sigma_eps,
        ages,
        years,
        degenerate: false,
    })
}

/// Noise-free surface `exp(α_x + β_x k_t)` over the fitted ranges.
pub fn reconstruct(params: &LeeCarterParams) -> Result<MortalitySurface> {
    let (n_ages, n_years) = (params.n_ages(), params.n_years());
    let mut rates = Vec::with_capacity(n_ages * n_years);
    for ia in 0..n_ages {
        for &k in &params.kappa {
            rates.push(params.log_rate(ia, k).exp());
        }
    }
    MortalitySurface::new(params.age_min(), params.year_min(), n_ages, n_years, rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn surface_from(alpha: &[f64], beta: &[f64], kappa: &[f64]) -> MortalitySurface {
        let mut rates = Vec::new();
        for (a, b) in alpha.iter().zip(beta) {
            for k in kappa {
                rates.push((a + b * k).exp());
            }
        }
        MortalitySurface::new(50, 2000, alpha.len(), kappa.len(), rates).unwrap()
    }

    fn sse(
        params: &LeeCarterParams,
        surface: &MortalitySurface,
        beta: &[f64],
        kappa: &[f64],
    ) -> f64 {
        let mut s = 0.0;
        for i in 0..surface.n_ages() {
            for j in 0..surface.n_years() {
                let r = surface.at(i, j).ln() - params.alpha[i] - beta[i] * kappa[j];
                s += r * r;
            }
        }
        s
    }

    /// Alternating least squares for the rank-1 factor of the row-centred
    /// log surface, independent of the SVD route.
    fn als_rank1(surface: &MortalitySurface) -> (Vec<f64>, Vec<f64>) {
        let (na, ny) = (surface.n_ages(), surface.n_years());
        let z: Vec<Vec<f64>> = (0..na)
            .map(|i| {
                let row: Vec<f64> = (0..ny).map(|j| surface.at(i, j).ln()).collect();
                let m = row.iter().sum::<f64>() / ny as f64;
                row.into_iter().map(|v| v - m).collect()
            })
            .collect();
        let mut k: Vec<f64> = (0..ny)
            .map(|j| j as f64 - (ny as f64 - 1.0) / 2.0 + 0.1)
            .collect();
        let mut b = vec![0.0; na];
        for _ in 0..20_000 {
            let kk: f64 = k.iter().map(|v| v * v).sum();
            for i in 0..na {
                b[i] = (0..ny).map(|j| z[i][j] * k[j]).sum::<f64>() / kk;
            }
            let bb: f64 = b.iter().map(|v| v * v).sum();
            for j in 0..ny {
                k[j] = (0..na).map(|i| z[i][j] * b[i]).sum::<f64>() / bb;
            }
        }
        let s: f64 = b.iter().sum();
        (
            b.iter().map(|v| v / s).collect(),
            k.iter().map(|v| v * s).collect(),
        )
    }

    #[test]
    fn reconstruct_direct_formula() {
        let p = LeeCarterParams {
            alpha: vec![-4.0, -3.0],
            beta: vec![0.5, 0.5],
            kappa: vec![1.0, -1.0],
            sigma_eps: 0.0,
            ages: [60, 61],
            years: [2000, 2001],
            degenerate: false,
        };
        let s = reconstruct(&p).unwrap();
        let want = [
            (-3.5f64).exp(),
            (-4.5f64).exp(),
            (-2.5f64).exp(),
            (-3.5f64).exp(),
        ];
        for (g, w) in s.rates().iter().zip(want) {
            assert!((g - w).abs() <= 1e-15 * w);
        }
    }

    #[test]
    fn recovers_noiseless_rank1() {
        let alpha = [-5.0, -4.2, -3.1, -2.0];
        let beta = [0.4, 0.3, 0.2, 0.1];
        let kappa = [6.0, 3.5, 1.0, -0.5, -4.0, -6.0];
        let s = surface_from(&alpha, &beta, &kappa);
        let p = fit_lee_carter(&s).unwrap();
        assert!(!p.degenerate);
        for (g, w) in p.alpha.iter().zip(alpha) {
            assert!((g - w).abs() <= 1e-8 * w.abs(), "{g} {w}");
        }
        for (g, w) in p.beta.iter().zip(beta) {
            assert!((g - w).abs() <= 1e-8 * w.abs(), "{g} {w}");
        }
        for (g, w) in p.kappa.iter().zip(kappa) {
            assert!((g - w).abs() <= 1e-8 * w.abs(), "{g} {w}");
        }
        assert!(p.sigma_eps <= 1e-10);
        let back = reconstruct(&p).unwrap();
        for (g, w) in back.rates().iter().zip(s.rates()) {
            assert!((g - w).abs() <= 1e-8 * w);
        }
    }

    #[test]
    fn constant_in_time_is_degenerate() {
        let s = MortalitySurface::from_fn(60..=64, 2000..=2005, |a, _| 0.001 * f64::from(a - 55))
            .unwrap();
        let p = fit_lee_carter(&s).unwrap();
        assert!(p.degenerate);
        assert!(p.kappa.iter().all(|&k| k == 0.0));
        assert_eq!(p.sigma_eps, 0.0);
        assert!((p.beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let back = reconstruct(&p).unwrap();
        for ia in 0..back.n_ages() {
            for iy in 1..back.n_years() {
                assert_eq!(back.at(ia, iy), back.at(ia, 0));
            }
        }
    }

    #[test]
    fn matches_alternating_least_squares_3x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let s = MortalitySurface::from_fn(60..=62, 2000..=2003, |_, _| {
                rng.random_range(0.001..0.2)
            })
            .unwrap();
            let p = fit_lee_carter(&s).unwrap();
            let (b, k) = als_rank1(&s);
            for i in 0..3 {
                for j in 0..4 {
                    let ours = p.beta[i] * p.kappa[j];
                    let oracle = b[i] * k[j];
                    assert!((ours - oracle).abs() < 1e-6, "{ours} vs {oracle}");
                }
            }
        }
    }

    #[test]
    fn sigma_eps_uses_residual_dof() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = MortalitySurface::from_fn(60..=63, 2000..=2004, |_, _| rng.random_range(0.01..0.1))
            .unwrap();
        let p = fit_lee_carter(&s).unwrap();
        let sse = sse(&p, &s, &p.beta, &p.kappa);
        let want = (sse / (20.0 - 4.0 - 5.0)).sqrt();
        assert!((p.sigma_eps - want).abs() < 1e-14);
    }

    #[test]
    fn rescaled_generators_fit_identically() {
        let alpha = [-5.0, -4.0, -3.0];
        let beta = [0.5, 0.3, 0.2];
        let kappa = [2.0, 1.0, -1.0, -2.0];
        let c = 3.7;
        let beta2: Vec<f64> = beta.iter().map(|b| b / c).collect();
        let kappa2: Vec<f64> = kappa.iter().map(|k| k * c).collect();
        let p1 = fit_lee_carter(&surface_from(&alpha, &beta, &kappa)).unwrap();
        let p2 = fit_lee_carter(&surface_from(&alpha, &beta2, &kappa2)).unwrap();
        for (a, b) in p1.beta.iter().zip(&p2.beta) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in p1.kappa.iter().zip(&p2.kappa) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = surface_from(&[-5.0, -4.0], &[0.7, 0.3], &[1.5, 0.25, -1.75]);
        let p = fit_lee_carter(&s).unwrap();
        let back = LeeCarterParams::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);

        let mut bad = p.clone();
        bad.beta[0] += 0.1;
        assert!(LeeCarterParams::from_json(&bad.to_json().unwrap()).is_err());
        let mut bad = p.clone();
        bad.kappa.pop();
        assert!(LeeCarterParams::from_json(&bad.to_json().unwrap()).is_err());
        assert!(LeeCarterParams::from_json("{}").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fit_is_local_minimum(
            rates in prop::collection::vec(0.001f64..0.5, 20),
            na in 2usize..=4,
            seed in any::<u64>(),
        ) {
            let ny = 5;
            let s = MortalitySurface::new(60, 2000, na, ny, rates[..na * ny].to_vec()).unwrap();
            let p = fit_lee_carter(&s).unwrap();
            let base = sse(&p, &s, &p.beta, &p.kappa);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let b: Vec<f64> = p.beta.iter().map(|v| v * (1.0 + rng.random_range(-0.01..0.01))).collect();
                let k: Vec<f64> = p.kappa.iter().map(|v| v * (1.0 + rng.random_range(-0.01..0.01))).collect();
                prop_assert!(sse(&p, &s, &b, &k) >= base - 1e-12 * (1.0 + base));
            }
        }

        #[test]
        fn constraints_and_idempotence(
            rates in prop::collection::vec(0.001f64..0.5, 12),
        ) {
            let s = MortalitySurface::new(60, 2000, 3, 4, rates).unwrap();
            let p = fit_lee_carter(&s).unwrap();
            prop_assert!((p.beta.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(p.kappa.iter().sum::<f64>().abs() < 1e-10);
            let once = reconstruct(&p).unwrap();
            let twice = reconstruct(&fit_lee_carter(&once).unwrap()).unwrap();
            for (a, b) in once.rates().iter().zip(twice.rates()) {
                prop_assert!((a - b).abs() <= 1e-9 * a);
            }
        }
    }
}
