#![no_main]

use libfuzzer_sys::fuzz_target;
use longevity_core::LeeCarterParams;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = LeeCarterParams::from_json(text) {
            assert_eq!(LeeCarterParams::from_json(&p.to_json().unwrap()).unwrap(), p);
        }
    }
});
