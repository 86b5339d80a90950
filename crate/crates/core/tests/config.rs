use std::path::PathBuf;

use rissat::harness::{self, ExperimentConfig};
use rissat::Error;

fn repo_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

#[test]
fn minimal_config_gets_every_default() {
    let cfg = ExperimentConfig::parse("[scenario]\nfrequency_ghz = 2.0\n").unwrap();
    let default = ExperimentConfig::default();
    assert_eq!(cfg.bpso, default.bpso);
    assert_eq!(cfg.adam, default.adam);
    assert_eq!(cfg.sweeps, default.sweeps);
}

#[test]
fn shipped_config_spells_out_the_defaults() {
    let cfg = harness::load_config(&repo_config()).unwrap();
    let stripped = ExperimentConfig { experiment: None, output_dir: None, ..cfg.clone() };
    let expected = ExperimentConfig { seed: Some(1), ..Default::default() };
    assert_eq!(stripped, expected);
    assert_eq!(cfg.hash().unwrap(), expected.hash().unwrap());
}

#[test]
fn out_of_range_latitude_names_the_field() {
    let err = ExperimentConfig::parse("[scenario.satellite]\nlat_deg = 200.0\nlon_deg = 0.0\nalt_km = 550.0\n").unwrap_err();
    match err {
        Error::ConfigValidation { field, .. } => assert!(field.contains("lat"), "{field}"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn round_trip_keeps_the_hash() {
    let text = "seed = 5\n[scenario]\ntx_power_dbm = 33.0\n[[scenario.ris]]\nlat_deg = 10.0003\nlon_deg = 20.0001\nelements = 12\n[adam]\nboundary = \"clip\"\n";
    let a = ExperimentConfig::parse(text).unwrap();
    let b = ExperimentConfig::parse(&a.to_toml().unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());
}

#[test]
fn edits_change_the_hash() {
    let a = ExperimentConfig::parse("seed = 5\n").unwrap();
    let b = ExperimentConfig::parse("seed = 5\n[scenario.consumption]\np_el_mw = 0.5\n").unwrap();
    assert_ne!(a.hash().unwrap(), b.hash().unwrap());
}

#[test]
fn load_reports_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = \n").unwrap();
    let err = harness::load_config(&path).unwrap_err();
    assert!(matches!(&err, Error::ConfigParse { path: p, .. } if p == &path));
    assert!(err.is_config_error());
    assert!(matches!(harness::load_config(&dir.path().join("missing.toml")), Err(Error::Io { .. })));
}
