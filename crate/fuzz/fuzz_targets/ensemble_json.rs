#![no_main]

use libfuzzer_sys::fuzz_target;
use thermal_bell::device::ConditionalOutputEnsemble;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ConditionalOutputEnsemble::from_json(text);
    }
});
