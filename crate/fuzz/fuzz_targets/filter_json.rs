#![no_main]

use libfuzzer_sys::fuzz_target;
use mwde::Multifilter;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(filter) = Multifilter::from_json(text) {
        // Accepted filters survive a round trip unchanged.
        let again = Multifilter::from_json(&filter.to_json()).expect("round trip");
        assert_eq!(filter.to_record(), again.to_record());
    }
});
