#![no_main]

use libfuzzer_sys::fuzz_target;
use thermal_bell::photon::parse_mode_list;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_mode_list(text, 1e-6);
    }
});
