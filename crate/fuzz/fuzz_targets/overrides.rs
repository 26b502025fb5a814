#![no_main]

use libfuzzer_sys::fuzz_target;
use tanaka_core::harness::{Experiment, ExperimentConfig};

// first byte picks the experiment, the rest is a NUL-separated argument list
fuzz_target!(|data: &[u8]| {
    let Some((&pick, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let experiment = Experiment::ALL[pick as usize % Experiment::ALL.len()];
    let args: Vec<&str> = text.split('\0').filter(|a| !a.is_empty()).collect();
    let mut cfg = ExperimentConfig::defaults(experiment);
    if cfg.apply_overrides(&args).is_ok() {
        assert_eq!(cfg.experiment, experiment);
        let _ = cfg.validate();
        let again = ExperimentConfig::parse(&cfg.to_text()).expect("printed config parses");
        assert_eq!(again.to_text(), cfg.to_text());
    }
});
