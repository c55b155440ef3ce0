#![no_main]

use libfuzzer_sys::fuzz_target;
use mwde::MixtureDensity;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(d) = MixtureDensity::from_json(text) else {
        return;
    };
    let (a, b) = d.domain;
    let mid = a / 2.0 + b / 2.0;
    for x in [a, mid, b] {
        let p = d.pdf(x);
        assert!(p >= 0.0 && !p.is_nan());
    }
    let mass = d.mass_between(a, b);
    assert!(mass > 0.0 && mass <= 1.0 + 1e-9);
    for x in d.sample(8, 0) {
        assert!(a <= x && x <= b);
    }
});
