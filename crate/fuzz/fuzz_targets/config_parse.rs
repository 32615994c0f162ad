#![no_main]

use libfuzzer_sys::fuzz_target;
use srnn_core::config::EngineConfig;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = EngineConfig::parse(data) {
        let again = EngineConfig::parse(&cfg.to_config_string()).expect("written configs parse");
        assert_eq!(again, cfg);
    }
});
