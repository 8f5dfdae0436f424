//! The level-2 encoder schedules are frozen in `tests/fixtures`. A change
//! to the generator that alters any gate order shows up here first.

use std::path::PathBuf;

use mhc::circuit::Circuit;
use mhc::code::CodeProfile;
use mhc::encoders::{build_encoder, check_noiseless, EncoderVariant};
use mhc::fault::single_fault_report;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn each_level_two_encoder(mut f: impl FnMut(&CodeProfile, EncoderVariant, &str)) {
    for p in CodeProfile::all_with_levels(2) {
        for v in EncoderVariant::ALL {
            f(&p, v, &format!("{p}_{v}"));
        }
    }
}

#[test]
fn generated_circuits_match_fixtures() {
    each_level_two_encoder(|p, v, stem| {
        let enc = build_encoder(p, v).unwrap();
        assert_eq!(enc.circuit.serialize(), fixture(&format!("{stem}.circuit")), "{stem}");
    });
}

#[test]
fn fixtures_round_trip_through_the_parser() {
    each_level_two_encoder(|_, _, stem| {
        let text = fixture(&format!("{stem}.circuit"));
        let c = Circuit::parse(&text).unwrap();
        assert_eq!(c.serialize(), text, "{stem}");
    });
}

#[test]
fn parsed_fixtures_prepare_logical_zero_and_tolerate_single_faults() {
    each_level_two_encoder(|p, v, stem| {
        let mut enc = build_encoder(p, v).unwrap();
        enc.circuit = Circuit::parse(&fixture(&format!("{stem}.circuit"))).unwrap();
        check_noiseless(&enc, 3).unwrap_or_else(|e| panic!("{stem}: {e}"));
        assert!(single_fault_report(&enc).is_fault_tolerant(), "{stem}");
    });
}

#[test]
fn census_fixtures() {
    each_level_two_encoder(|p, v, stem| {
        let want: serde_json::Value = serde_json::from_str(&fixture(&format!("{stem}.census.json"))).unwrap();
        let got = serde_json::to_value(build_encoder(p, v).unwrap().census()).unwrap();
        assert_eq!(got, want, "{stem}");
        assert_eq!(want["total"], want["formula_total"], "{stem}");
    });
}
