#![no_main]

use fasa_core::experiment::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    // anything accepted must survive a canonical round trip
    if let Ok(cfg) = parse_config(text) {
        let again = parse_config(&cfg.to_toml()).expect("canonical form parses");
        assert_eq!(again, cfg);
    }
});
