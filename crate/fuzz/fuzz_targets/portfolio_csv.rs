#![no_main]

use libfuzzer_sys::fuzz_target;
use longevity_core::valuation::load_portfolio;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = load_portfolio(data) {
        assert!(!p.is_empty());
        assert!(p.members().iter().all(|m| m.annuity > 0.0));
    }
});
