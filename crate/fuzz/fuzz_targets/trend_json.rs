#![no_main]

use libfuzzer_sys::fuzz_target;
use longevity_core::TrendFit;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(fit) = TrendFit::from_json(text) {
            assert!(fit.n >= 3);
            let _ = longevity_core::sigma_t_sq(&fit, fit.n as i64 + 10);
        }
    }
});
