use atomlink::config::LinkConfig;
use atomlink::io::*;
use atomlink::model::LinkModel;
use atomlink::node::Basis;
use atomlink::sequencer::*;
use atomlink::Error;

fn schema_column(r: Result<Table, Error>) -> String {
    match r {
        Err(Error::Schema { column, .. }) => column,
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn reads_required_and_optional_columns() {
    let text = "# synthetic\nlength_km,snr,sigma\n0,10.5,0.5\n5, 9.5 ,0.4\n";
    let t = read_table(text.as_bytes(), &["length_km", "snr"], &["sigma"]).unwrap();
    assert_eq!(t.rows(), 2);
    assert_eq!(t.column("snr").unwrap(), &[10.5, 9.5]);
    assert_eq!(t.optional("sigma").unwrap(), &[0.5, 0.4]);
    assert!(t.optional("other").is_none());
}

#[test]
fn missing_column_is_named() {
    let r = read_table("length_km,sigma\n1,2\n".as_bytes(), &["length_km", "snr"], &["sigma"]);
    assert_eq!(schema_column(r), "snr");
}

#[test]
fn unexpected_column_is_named() {
    let r = read_table("length_km,snr,colour\n1,2,3\n".as_bytes(), &["length_km", "snr"], &[]);
    assert_eq!(schema_column(r), "colour");
}

#[test]
fn non_numeric_cell_is_named() {
    let r = read_table("time_us,efficiency\n1,0.2\n2,abc\n".as_bytes(), &["time_us", "efficiency"], &[]);
    match r {
        Err(Error::Schema { column, reason }) => {
            assert_eq!(column, "efficiency");
            assert!(reason.contains("row 3"), "{reason}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn ragged_row_is_a_schema_error() {
    let r = read_table("time_us,efficiency\n1,0.2\n2\n".as_bytes(), &["time_us", "efficiency"], &[]);
    assert_eq!(schema_column(r), "efficiency");
}

#[test]
fn empty_input_is_a_schema_error() {
    assert!(matches!(read_table("".as_bytes(), &["a"], &[]), Err(Error::Schema { .. })));
}

#[test]
fn trials_round_trip_reproduces_fringes() {
    let mut cfg = LinkConfig::default();
    cfg.node.p_exc = 0.03;
    let out = run_session(&cfg, TrialSpan::first(300_000), 5).unwrap();
    let mut bytes = Vec::new();
    write_trials_csv(&out, &mut bytes).unwrap();
    let rows = read_trials_csv(bytes.as_slice()).unwrap();
    assert_eq!(rows.len(), out.records.len());
    let model = LinkModel::new(&cfg).unwrap();
    for basis in [Basis::Z, Basis::X] {
        assert_eq!(fringe_from_trials(&model, &rows, basis).unwrap(), fringe_dataset(&model, &out, basis));
    }
}

#[test]
fn trials_with_wrong_config_are_rejected() {
    let cfg = LinkConfig::default();
    let model = LinkModel::new(&cfg).unwrap();
    // Trial 0 maps to the first z setting.
    let text = "trial_id,write_time_us,herald,herald_time_us,basis,delay_us,outcome\n0,1.0,T,2.0,x,3.0,up\n";
    let rows = read_trials_csv(text.as_bytes()).unwrap();
    assert!(matches!(fringe_from_trials(&model, &rows, Basis::Z), Err(Error::Schema { column, .. }) if column == "basis"));
}

#[test]
fn bad_trial_labels_are_named() {
    let text = "trial_id,write_time_us,herald,herald_time_us,basis,delay_us,outcome\n0,1.0,Q,2.0,z,3.0,up\n";
    assert!(matches!(read_trials_csv(text.as_bytes()), Err(Error::Schema { column, .. }) if column == "herald"));
    let text = "trial_id,write_time_us,herald,herald_time_us,basis,delay_us\n";
    assert!(matches!(read_trials_csv(text.as_bytes()), Err(Error::Schema { column, .. }) if column == "outcome"));
}
