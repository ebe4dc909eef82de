#![no_main]

use libfuzzer_sys::fuzz_target;
use rn_dirac::harness::parse_samples;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(set) = parse_samples(text) {
        assert!(!set.pairs().is_empty());
        assert!(set.pairs().iter().all(|p| p.0.is_finite() && p.1.is_finite()));
    }
});
