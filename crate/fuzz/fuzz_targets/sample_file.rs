#![no_main]

use libfuzzer_sys::fuzz_target;
use mwde::densities::parse_samples;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(values) = parse_samples(text) {
        assert!(values.iter().all(|v| v.is_finite()));
    }
});
