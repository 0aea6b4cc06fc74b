use atomlink::config::*;
use atomlink::Error;

#[test]
fn defaults_validate_and_round_trip() {
    let cfg = LinkConfig::default();
    cfg.validate().unwrap();
    let back = LinkConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn empty_file_is_a_parse_error() {
    assert!(matches!(LinkConfig::from_toml_str(""), Err(Error::ConfigParse { .. })));
    assert!(matches!(LinkConfig::from_toml_str("  \n\t\n"), Err(Error::ConfigParse { line: 1, column: 1, .. })));
}

#[test]
fn syntax_error_reports_line_and_column() {
    let text = "seed = 3\n[node]\np_exc = = 0.01\n";
    match LinkConfig::from_toml_str(text) {
        Err(Error::ConfigParse { line, column, .. }) => {
            assert_eq!(line, 3);
            assert!(column > 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn out_of_range_efficiency_names_the_field() {
    let text = "[detectors.snspd]\nefficiency = 1.2\n";
    match LinkConfig::from_toml_str(text) {
        Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "detectors.snspd.efficiency"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    for text in ["[node]\np_ex = 0.01\n", "[fiber]\nlenght_km = 5\n", "[detectors.apd]\ndark = 3\n", "colour = 1\n"] {
        assert!(matches!(LinkConfig::from_toml_str(text), Err(Error::ConfigParse { .. })), "{text}");
    }
}

#[test]
fn partial_detector_sections_keep_type_defaults() {
    let cfg = LinkConfig::from_toml_str("[detectors.snspd]\ndark_rate_cps = 12.0\n").unwrap();
    assert_eq!(cfg.detectors.snspd.dark_rate_cps, 12.0);
    assert_eq!(cfg.detectors.snspd.efficiency, 0.88);
    assert_eq!(cfg.detectors.apd.efficiency, 0.65);
}

#[test]
fn infinite_coherence_time_round_trips() {
    let cfg = LinkConfig::default();
    assert!(cfg.node.coherence_tau_us.is_infinite());
    let text = cfg.to_toml_string();
    assert!(LinkConfig::from_toml_str(&text).unwrap().node.coherence_tau_us.is_infinite());
}

#[test]
fn comment_only_file_means_defaults() {
    assert_eq!(LinkConfig::from_toml_str("# nothing set\n").unwrap(), LinkConfig::default());
}

#[test]
fn zero_trials_are_rejected() {
    match LinkConfig::from_toml_str("[run]\ntrials = 0\n") {
        Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "run.trials"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn local_mode_uses_apds_and_fixed_delay() {
    let cfg = LinkConfig::from_toml_str("[link]\nmode = \"local\"\n").unwrap();
    assert_eq!(cfg.herald_detector().efficiency, 0.65);
    assert_eq!(cfg.herald_delay_us(), 0.7);
}
