#![no_main]
use libfuzzer_sys::fuzz_target;
use toric_core::schema::{parse_json, rat_from_json, rat_to_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(v) = parse_json(s) {
            if let Ok(r) = rat_from_json(&v) {
                assert_eq!(rat_from_json(&rat_to_json(&r)).unwrap(), r);
            }
        }
    }
});
