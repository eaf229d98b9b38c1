#![no_main]
use libfuzzer_sys::fuzz_target;
use toric_core::schema::{parse_json, twisted_from_json, twisted_to_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(v) = parse_json(s) {
            if let Ok(f) = twisted_from_json(&v) {
                assert_eq!(twisted_from_json(&twisted_to_json(&f)).unwrap(), f);
            }
        }
    }
});
