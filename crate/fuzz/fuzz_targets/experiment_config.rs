#![no_main]

use libfuzzer_sys::fuzz_target;
use mwde::bench::{resolve, ExperimentConfig};
use mwde::FilterRegistry;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_json(text) {
        let _ = resolve(&config, &FilterRegistry::new());
    }
});
