#![no_main]

use libfuzzer_sys::fuzz_target;
use thermal_bell::sweeps::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entries) = parse_config(text) {
        for e in &entries {
            assert!(!e.key.is_empty() && !e.value.is_empty());
            assert_eq!(e.to_args().len(), 2);
        }
    }
});
