//! Prospective mortality tables with trend uncertainty, and Monte Carlo
//! valuation of life-annuity portfolios.
//!
//! The pipeline runs: [`surface`] ingestion, a Lee-Carter fit
//! ([`leecarter`]), an affine trend on the period index with its estimator
//! law ([`trend`]), and two-level simulation of the discounted liability
//! ([`valuation`]).

pub mod error;
pub mod leecarter;
mod linalg;
pub mod rng;
pub mod surface;
pub mod synthetic;
pub mod trend;
pub mod valuation;

pub use error::{Error, Result};
pub use leecarter::{fit_lee_carter, reconstruct, LeeCarterParams};
pub use surface::{
    cohort_view, load_surface, mu_to_q, save_surface, AgeTail, CohortRateVector, CohortSpec,
    MortalitySurface,
};
pub use trend::{
    build_surface, draw_scenario, fit_trend, project_kappa, sigma_t_sq, SurfaceVariant, TrendFit,
    TrendScenario,
};
pub use valuation::{
    decompose, omega_n, run_valuation, run_valuation_on_surface, Mode, Portfolio, ValuationConfig,
    ValuationResult, VarianceDecomposition,
};
