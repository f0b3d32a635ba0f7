#![no_main]

use heavytail::summaries::EventSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ev) = text.parse::<EventSpec>() {
            let again: EventSpec = ev.to_string().parse().expect("displayed event parses");
            assert_eq!(again.to_string(), ev.to_string());
        }
    }
});
