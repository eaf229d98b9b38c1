#![no_main]
use libfuzzer_sys::fuzz_target;
use toric_core::schema::{parse_json, prescribed_from_json, prescribed_to_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(v) = parse_json(s) {
            if let Ok(d) = prescribed_from_json(&v) {
                assert_eq!(prescribed_from_json(&prescribed_to_json(&d)).unwrap(), d);
            }
        }
    }
});
