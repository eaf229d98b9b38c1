#![no_main]
use libfuzzer_sys::fuzz_target;
use toric_core::schema::grid_from_arg;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(g) = grid_from_arg(s, 1e-3, None) {
            _ = g.validate();
        }
    }
});
