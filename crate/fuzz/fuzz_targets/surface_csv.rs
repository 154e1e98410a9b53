#![no_main]

use libfuzzer_sys::fuzz_target;
use longevity_core::{load_surface, save_surface};

fuzz_target!(|data: &[u8]| {
    if let Ok(surface) = load_surface(data) {
        let mut out = Vec::new();
        save_surface(&surface, &mut out).unwrap();
        assert_eq!(load_surface(out.as_slice()).unwrap(), surface);
    }
});
