//! Replays the checked-in fuzz seeds so they stay valid inputs.

use std::fs;
use std::path::PathBuf;

use thermal_bell::device::ConditionalOutputEnsemble;
use thermal_bell::photon::{parse_mode_list, PhotonNumberDistribution};
use thermal_bell::sweeps::{parse_config, parse_grid_csv};

fn seeds(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<String> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn distribution_seeds_parse_and_round_trip() {
    for s in seeds("distribution_json") {
        let d = PhotonNumberDistribution::from_json(&s).unwrap();
        assert_eq!(PhotonNumberDistribution::from_json(&d.to_json().unwrap()).unwrap(), d);
    }
}

#[test]
fn ensemble_seeds_parse() {
    for s in seeds("ensemble_json") {
        ConditionalOutputEnsemble::from_json(&s).unwrap();
    }
}

#[test]
fn grid_seeds_reevaluate() {
    for s in seeds("grid_csv") {
        assert!(parse_grid_csv(&s).unwrap().reevaluates_exactly().unwrap());
    }
}

#[test]
fn config_and_mode_list_seeds_parse() {
    for s in seeds("config") {
        assert!(!parse_config(&s).unwrap().is_empty());
    }
    for s in seeds("mode_list") {
        assert!(!parse_mode_list(&s, 1e-6).unwrap().is_empty());
    }
}
