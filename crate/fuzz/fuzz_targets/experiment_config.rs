#![no_main]

use hsim_bench::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ExperimentConfig::parse(text) {
        // The canonical form parses back to the same hash.
        let again = ExperimentConfig::parse(config.canonical_text()).unwrap();
        assert_eq!(again.hash(), config.hash());
    }
});
