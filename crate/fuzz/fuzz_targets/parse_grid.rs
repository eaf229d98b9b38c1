#![no_main]
use libfuzzer_sys::fuzz_target;
use toric_core::schema::{grid_from_json, parse_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(v) = parse_json(s) {
            if let Ok(g) = grid_from_json(&v) {
                _ = g.validate();
            }
        }
    }
});
