#![no_main]
use libfuzzer_sys::fuzz_target;
use toric_core::schema::{ensemble_input_from_json, parse_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(v) = parse_json(s) {
            _ = ensemble_input_from_json(&v);
        }
    }
});
