#![no_main]

use libfuzzer_sys::fuzz_target;
use rn_dirac::harness::RawConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(raw) = RawConfig::parse(text) {
        if let Ok(cfg) = raw.resolve() {
            assert!(cfg.mass > cfg.charge.abs());
            assert!(!cfg.experiments.is_empty());
            assert!(cfg.energies.windows(2).all(|w| w[0] < w[1]));
        }
    }
    // overrides go through the same validation
    let args: Vec<&str> = text.split_whitespace().collect();
    let mut raw = RawConfig::default();
    if raw.apply_overrides(&args).is_ok() {
        let _ = raw.resolve();
    }
});
