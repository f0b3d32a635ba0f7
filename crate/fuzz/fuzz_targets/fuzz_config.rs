#![no_main]

use heavytail::config::ModelConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ModelConfig::parse(text) {
            // anything accepted must survive a round trip
            let again = ModelConfig::parse(&cfg.to_json()).expect("serialized config parses");
            assert_eq!(again, cfg);
        }
    }
});
