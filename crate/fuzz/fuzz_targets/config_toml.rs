#![no_main]

use groupcraft::runner::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(cfg) = ExperimentConfig::from_toml(text) {
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).expect("written config parses");
        assert_eq!(again.hash(), cfg.hash());
    }
});
