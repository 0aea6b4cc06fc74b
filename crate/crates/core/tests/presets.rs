//! The shipped presets are the calibrated reference configurations.

use std::path::Path;

use atomlink::calibration::{calibrate, calibrated_column, REFERENCE_COLUMNS};
use atomlink::config::LinkConfig;

fn load(name: &str) -> LinkConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name);
    LinkConfig::from_toml_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn presets_match_the_calibration() {
    let base = LinkConfig::default();
    let cal = calibrate(&base).unwrap();
    for (name, column) in
        [("local.cfg", 0), ("telecom10m.cfg", 1), ("km5.cfg", 2), ("km10.cfg", 3), ("km20.cfg", 4), ("km100_model.cfg", 4)]
    {
        let preset = load(name);
        let mut expected = calibrated_column(&base, &cal, &REFERENCE_COLUMNS[column]);
        expected.run = preset.run.clone();
        if name == "km100_model.cfg" {
            expected.fiber.length_km = 100.0;
        }
        assert_eq!(preset, expected, "{name}");
    }
}

#[test]
fn presets_name_their_reference_column() {
    for (name, column) in [("local.cfg", "local"), ("km5.cfg", "5 km"), ("km10.cfg", "10 km"), ("km20.cfg", "20 km")] {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name);
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with(&format!("# Reference column: {column} (")), "{name}");
    }
}
