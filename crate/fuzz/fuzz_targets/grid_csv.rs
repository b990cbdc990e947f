#![no_main]

use libfuzzer_sys::fuzz_target;
use thermal_bell::sweeps::parse_grid_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(g) = parse_grid_csv(text) {
            let _ = g.reevaluates_exactly();
        }
    }
});
