//! Portfolio valuation by Monte Carlo and the life-table quantities built
//! on cohort reads.

pub mod decompose;
pub mod engine;
pub mod lifetimes;
pub mod portfolio;
pub mod stats;
pub mod tables;

pub use decompose::{decompose, omega_n, VarianceDecomposition};
pub use engine::{
    expected_liability, run_valuation, run_valuation_on_surface, Mode, ValuationConfig,
};
pub use lifetimes::{liability, simulate_lifetimes, LifetimeSampler};
pub use portfolio::{load_portfolio, replicate, Member, Portfolio};
pub use stats::{write_histogram_csv, ValuationResult, REPORT_QUANTILES};
pub use tables::{
    annuity_factor, curtate_expectancy, expectancy_drift, expectancy_series, life_expectancy,
    DriftComparison,
};
