#![no_main]

use libfuzzer_sys::fuzz_target;
use thermal_bell::photon::PhotonNumberDistribution;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = PhotonNumberDistribution::from_json(text) {
        // anything accepted must survive a round trip
        let again = PhotonNumberDistribution::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(again, d);
    }
});
