#![no_main]

use libfuzzer_sys::fuzz_target;
use longevity_cli::config::{RunConfig, Settings};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(settings) = Settings::parse(text) {
            let _ = RunConfig::from_settings(&settings);
        }
    }
});
