use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn preset(name: &str) -> PathBuf {
    repo(&format!("presets/{name}"))
}

fn atomlink<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_atomlink")).args(args).env_remove("ATOMLINK_OUT").output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Value {
    let mut args: Vec<&std::ffi::OsStr> = vec!["run".as_ref(), "--config".as_ref(), config.as_os_str(), "--out".as_ref(), out.as_os_str()];
    args.extend(extra.iter().map(std::ffi::OsStr::new));
    ok(&atomlink(args));
    json(&out.join("summary.json"))
}

/// Parsed CSV rows keyed by header.
fn csv_rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    rdr.records().map(|r| headers.iter().zip(r.unwrap().iter()).map(|(h, c)| (h.into(), c.into())).collect()).collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = `{}`", row[key]))
}

const OUTPUTS: [&str; 8] = [
    "config.toml",
    "trials.csv",
    "events.csv",
    "write_histogram.csv",
    "read_histogram.csv",
    "fringe_z.csv",
    "fringe_x.csv",
    "summary.json",
];

#[test]
fn fixed_seed_gives_byte_identical_outputs() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        run(&preset("km20.cfg"), dir, &["--trials", "300000"]);
    }
    for f in OUTPUTS {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_override_changes_the_trials() {
    let tmp = TempDir::new().unwrap();
    let a = run(&preset("km20.cfg"), &tmp.path().join("a"), &["--trials", "300000", "--seed", "7"]);
    let b = run(&preset("km20.cfg"), &tmp.path().join("b"), &["--trials", "300000", "--seed", "8"]);
    assert_eq!(a["seed"], 7);
    assert_eq!(b["seed"], 8);
    assert_ne!(
        std::fs::read(tmp.path().join("a/trials.csv")).unwrap(),
        std::fs::read(tmp.path().join("b/trials.csv")).unwrap()
    );
}

#[test]
fn resolved_config_echo_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    run(&preset("km10.cfg"), &first, &["--trials", "200000", "--seed", "3"]);
    let second = tmp.path().join("second");
    run(&first.join("config.toml"), &second, &[]);
    for f in OUTPUTS {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn summary_has_schema_version_and_statistical_errors() {
    let tmp = TempDir::new().unwrap();
    let s = run(&preset("km20.cfg"), tmp.path(), &["--trials", "2000000"]);
    assert_eq!(s["schema_version"], 1);
    for key in ["herald_rate", "sigma_herald_rate", "repetition_rate_khz"] {
        assert!(s[key].as_f64().unwrap() > 0.0, "{key}");
    }
    for key in ["vz", "vx"] {
        assert!(s[key]["sigma_v"].as_f64().unwrap() > 0.0, "{key}");
    }
    assert!(s["fidelity"]["sigma_f"].as_f64().unwrap() > 0.0);
    assert!(s["write_snr"]["snr"].as_f64().unwrap() > 0.0);
    assert_eq!(s["config"]["fiber"]["length_km"], 20.0);
}

#[test]
fn local_preset_previews_about_thirty_khz() {
    let tmp = TempDir::new().unwrap();
    let s = run(&preset("local.cfg"), tmp.path(), &["--trials", "1000"]);
    let rate = s["repetition_rate_khz"].as_f64().unwrap();
    assert!((rate - 29.0).abs() < 0.15 * 29.0, "{rate}");
    assert!((rate - 31.4).abs() < 0.15 * 31.4, "{rate}");
}

#[test]
fn local_preset_fidelity_near_ninety_six_percent() {
    let tmp = TempDir::new().unwrap();
    let s = run(&preset("local.cfg"), tmp.path(), &[]);
    let (f, sigma) = (s["fidelity"]["f"].as_f64().unwrap(), s["fidelity"]["sigma_f"].as_f64().unwrap());
    assert!((f - 0.96).abs() < 3.0 * sigma + 0.01, "F = {f} ± {sigma}");
}

#[test]
fn twenty_km_preset_fidelity_exceeds_eighty_percent() {
    let tmp = TempDir::new().unwrap();
    let s = run(&preset("km20.cfg"), tmp.path(), &[]);
    assert_eq!(s["trials"], 10_000_000);
    let f = s["fidelity"]["f"].as_f64().unwrap();
    assert!(f > 0.80, "F = {f}");
}

#[test]
fn analyze_reproduces_the_run_fits() {
    let tmp = TempDir::new().unwrap();
    let run_dir = tmp.path().join("run");
    let s = run(&preset("km20.cfg"), &run_dir, &["--trials", "3000000"]);
    let an = tmp.path().join("an");
    ok(&atomlink([
        "analyze".as_ref(),
        "--config".as_ref(),
        preset("km20.cfg").as_os_str(),
        "--trials".as_ref(),
        run_dir.join("trials.csv").as_os_str(),
        "--out".as_ref(),
        an.as_os_str(),
    ]));
    let a = json(&an.join("analysis.json"));
    for key in ["vz", "vx"] {
        assert_eq!(a[key]["v"], s[key]["v"], "{key}");
        assert_eq!(a[key]["sigma_v"], s[key]["sigma_v"], "{key}");
    }
}

#[test]
fn analyze_with_the_wrong_config_names_the_basis_column() {
    let tmp = TempDir::new().unwrap();
    let run_dir = tmp.path().join("run");
    run(&preset("km20.cfg"), &run_dir, &["--trials", "300000"]);
    let cfg = tmp.path().join("other.cfg");
    let text = std::fs::read_to_string(preset("km20.cfg")).unwrap();
    std::fs::write(&cfg, text.replace("z_hwp_deg = [", "z_hwp_deg = [5.0, ")).unwrap();
    let out = atomlink([
        "analyze".as_ref(),
        "--config".as_ref(),
        cfg.as_os_str(),
        "--trials".as_ref(),
        run_dir.join("trials.csv").as_os_str(),
        "--out".as_ref(),
        tmp.path().join("an").as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`basis`"), "{}", stderr(&out));
}

#[test]
fn efficiency_above_one_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "[detectors.snspd]\nefficiency = 1.2\n").unwrap();
    let out = atomlink(["run".as_ref(), "--config".as_ref(), cfg.as_os_str(), "--out".as_ref(), tmp.path().as_os_str()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`detectors.snspd.efficiency`"), "{}", stderr(&out));
}

#[test]
fn empty_config_is_a_parse_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("empty.cfg");
    std::fs::write(&cfg, "").unwrap();
    let out = atomlink(["run".as_ref(), "--config".as_ref(), cfg.as_os_str(), "--out".as_ref(), tmp.path().as_os_str()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("parse error at line 1, column 1"), "{}", stderr(&out));
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("typo.cfg");
    std::fs::write(&cfg, "[fiber]\nlenght_km = 5.0\n").unwrap();
    let out = atomlink(["run".as_ref(), "--config".as_ref(), cfg.as_os_str(), "--out".as_ref(), tmp.path().as_os_str()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lenght_km"), "{}", stderr(&out));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(atomlink(Vec::<&str>::new()).status.code(), Some(1));
    assert_eq!(atomlink(["frobnicate"]).status.code(), Some(1));
    assert_eq!(atomlink(["--help"]).status.code(), Some(0));
    assert_eq!(atomlink(["--version"]).status.code(), Some(0));
    let cfg = preset("km20.cfg");
    let conflicting = atomlink([
        "run".as_ref(),
        "--config".as_ref(),
        cfg.as_os_str(),
        "--trials".as_ref(),
        "10".as_ref(),
        "--duration-s".as_ref(),
        "1".as_ref(),
    ]);
    assert_eq!(conflicting.status.code(), Some(1));
    let missing = atomlink(["run", "--config", "/nonexistent/atomlink.cfg"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("cannot open"));
    // An output path that is a regular file fails while writing.
    let file = tmp.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    let blocked = atomlink([
        "run".as_ref(),
        "--config".as_ref(),
        cfg.as_os_str(),
        "--trials".as_ref(),
        "10".as_ref(),
        "--out".as_ref(),
        file.as_os_str(),
    ]);
    assert_eq!(blocked.status.code(), Some(3), "{}", stderr(&blocked));
}

#[test]
fn output_directory_defaults_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_atomlink"))
        .args(["run".as_ref(), "--config".as_ref(), preset("km20.cfg").as_os_str(), "--trials".as_ref(), "1000".as_ref()])
        .env("ATOMLINK_OUT", tmp.path().join("from-env"))
        .output()
        .unwrap();
    ok(&out);
    assert!(tmp.path().join("from-env/summary.json").exists());
}

fn sweep(config: &str, axis: &str, values: &str, extra: &[&str], out: &Path) -> Output {
    let mut args: Vec<std::ffi::OsString> = vec!["sweep".into(), "--config".into(), preset(config).into()];
    args.extend(["--axis".into(), axis.into(), format!("--values={values}").into(), "--out".into(), out.into()]);
    args.extend(extra.iter().map(Into::into));
    atomlink(args)
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let tmp = TempDir::new().unwrap();
    let out = sweep("km20.cfg", "delay", "", &[], tmp.path());
    let text = ok(&out);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("value,f_sim,"));
    assert_eq!(std::fs::read_to_string(tmp.path().join("sweep_delay.csv")).unwrap(), text);
}

#[test]
fn sweep_rejects_an_unknown_axis() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(sweep("km20.cfg", "temperature", "1", &[], tmp.path()).status.code(), Some(1));
}

#[test]
fn fiber_length_sweep_follows_the_model() {
    let tmp = TempDir::new().unwrap();
    let text = ok(&sweep("km20.cfg", "fiber_length", "0,5,10,20", &["--trials", "8000000"], tmp.path()));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    let model: Vec<f64> = rows.iter().map(|r| num(r, "f_model")).collect();
    assert!(model.windows(2).all(|w| w[1] <= w[0]), "{model:?}");
    for r in &rows {
        let (f, sigma, m) = (num(r, "f_sim"), num(r, "sigma_f_sim"), num(r, "f_model"));
        assert!((f - m).abs() < 4.0 * sigma, "L = {}: {f} ± {sigma} vs {m}", r["value"]);
    }
    let rates: Vec<f64> = rows.iter().map(|r| num(r, "rep_rate_khz")).collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]), "{rates:?}");
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let tmp = TempDir::new().unwrap();
    let a = ok(&sweep("km20.cfg", "pump_power", "1.0,0.5,1.5", &["--trials", "200000"], &tmp.path().join("a")));
    let b = ok(&sweep("km20.cfg", "pump_power", "1.0,0.5,1.5", &["--trials", "200000"], &tmp.path().join("b")));
    assert_eq!(a, b);
    let values: Vec<f64> = csv_rows(&a).iter().map(|r| num(r, "value")).collect();
    assert_eq!(values, [1.0, 0.5, 1.5]);
}

#[test]
fn hundred_km_model_snr() {
    let tmp = TempDir::new().unwrap();
    let text = ok(&sweep("km100_model.cfg", "fiber_length", "100", &["--trials", "1000"], tmp.path()));
    let snr = num(&csv_rows(&text)[0], "snr_model");
    assert!((snr - 6.9).abs() <= 0.5, "{snr}");
}

#[test]
fn negative_pump_power_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let out = sweep("km20.cfg", "pump_power", "-1", &[], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`qfc.pump_power_w`"));
}

fn fit(kind: &str, data: &Path, out: &Path) -> Output {
    atomlink(["fit".as_ref(), kind.as_ref(), data.as_os_str(), "--out".as_ref(), out.as_os_str()])
}

fn fit_result(kind: &str) -> Value {
    let tmp = TempDir::new().unwrap();
    ok(&fit(kind, &repo(&format!("data/{kind}.csv")), tmp.path()));
    let report = json(&tmp.path().join(format!("fit_{kind}.json")));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["kind"], kind);
    report["result"].clone()
}

#[test]
fn snr_fit_on_shipped_data() {
    let r = fit_result("snr");
    let noise = r["params"]["r_noise_cps"].as_f64().unwrap();
    let sigma = r["sigma_r_noise"].as_f64().unwrap();
    assert!((noise - 257.0).abs() < 3.0 * sigma && (noise - 257.0).abs() < 0.1 * 257.0, "{noise} ± {sigma}");
    assert_eq!(r["params"]["r_dark_cps"], 38.0);
}

#[test]
fn decay_fit_on_shipped_data() {
    let r = fit_result("decay");
    assert_eq!(r["best"], "gaussian");
    let tau = r["gaussian"]["tau_us"].as_f64().unwrap();
    assert!((tau - 160.0).abs() < 0.05 * 160.0, "{tau}");
}

#[test]
fn dfg_fit_on_shipped_data() {
    let r = fit_result("dfg");
    let p = r["p_peak_w"].as_f64().unwrap();
    assert!((p - 1.749).abs() < 0.05, "{p}");
    assert!((r["eta_max"].as_f64().unwrap() - 0.472).abs() < 0.02);
}

#[test]
fn fringe_fit_on_shipped_data() {
    let r = fit_result("fringe");
    let (v, sigma) = (r["v"].as_f64().unwrap(), r["sigma_v"].as_f64().unwrap());
    assert!((v - 0.95).abs() < 3.0 * sigma, "{v} ± {sigma}");
}

#[test]
fn malformed_csv_names_the_column() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("decay", "time_us,eff\n1,2\n", "`eff`"),
        ("decay", "time_us\n1\n", "`efficiency`"),
        ("snr", "length_km,snr\n0,90\n5,oops\n", "`snr`"),
        ("dfg", "pump_w,efficiency\n0.2,0.1\n0.4\n", "`efficiency`"),
    ];
    for (kind, text, column) in cases {
        let data = tmp.path().join("bad.csv");
        std::fs::write(&data, text).unwrap();
        let out = fit(kind, &data, tmp.path());
        assert_eq!(out.status.code(), Some(2), "{kind}: {text}");
        assert!(stderr(&out).contains(column), "{kind}: {}", stderr(&out));
    }
}

#[test]
fn calibrate_reports_the_fitted_values() {
    let tmp = TempDir::new().unwrap();
    ok(&atomlink(["calibrate".as_ref(), "--out".as_ref(), tmp.path().as_os_str()]));
    let c = json(&tmp.path().join("calibration.json"));
    assert_eq!(c["columns"].as_array().unwrap().len(), 5);
    let cal = &c["calibration"];
    let preset_text = std::fs::read_to_string(preset("km20.cfg")).unwrap();
    let expected = format!("p_exc = {}", cal["p_exc_20km"].as_f64().unwrap());
    assert!(preset_text.contains(&expected), "{expected}");
}
