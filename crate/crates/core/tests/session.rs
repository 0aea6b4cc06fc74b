use atomlink::config::{LinkConfig, LinkMode};
use atomlink::model::LinkModel;
use atomlink::sequencer::*;

fn telecom(km: f64, p_exc: f64) -> LinkConfig {
    let mut c = LinkConfig::default();
    c.fiber.length_km = km;
    c.node.p_exc = p_exc;
    c
}

fn csv_bytes(out: &SessionOutput) -> (Vec<u8>, Vec<u8>) {
    let mut trials = Vec::new();
    let mut events = Vec::new();
    write_trials_csv(out, &mut trials).unwrap();
    write_events_csv(out, &mut events).unwrap();
    (trials, events)
}

#[test]
fn same_seed_gives_identical_csv() {
    let cfg = telecom(5.0, 0.02);
    let a = run_session(&cfg, TrialSpan::first(200_000), 7).unwrap();
    let b = run_session(&cfg, TrialSpan::first(200_000), 7).unwrap();
    assert!(a.total_heralds() > 100);
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
}

#[test]
fn different_seeds_differ() {
    let cfg = telecom(5.0, 0.02);
    let a = run_session(&cfg, TrialSpan::first(100_000), 1).unwrap();
    let b = run_session(&cfg, TrialSpan::first(100_000), 2).unwrap();
    assert_ne!(a.records, b.records);
}

#[test]
fn splitting_a_span_does_not_change_trials() {
    let cfg = telecom(0.0, 0.02);
    let whole = run_session(&cfg, TrialSpan::first(100_000), 11).unwrap();
    let mut parts = run_session(&cfg, TrialSpan::new(0, 37_123), 11).unwrap();
    parts.merge(run_session(&cfg, TrialSpan::new(37_123, 62_877), 11).unwrap()).unwrap();
    assert_eq!(whole, parts);
}

#[test]
fn sharded_run_matches_single_run_statistically() {
    let cfg = telecom(5.0, 0.02);
    let n = 400_000;
    let single = run_session(&cfg, TrialSpan::first(n), 3).unwrap();
    let sharded = run_sharded(&cfg, n, 4, 3).unwrap();
    assert_eq!(sharded.trials, n);
    let (a, b) = (single.total_heralds() as f64, sharded.total_heralds() as f64);
    // Two independent Poisson-like counts: the difference has variance a + b.
    assert!((a - b).abs() < 5.0 * (a + b).sqrt(), "{a} vs {b}");
}

#[test]
fn sharding_is_deterministic() {
    let cfg = telecom(5.0, 0.02);
    assert_eq!(run_sharded(&cfg, 50_000, 3, 9).unwrap(), run_sharded(&cfg, 50_000, 3, 9).unwrap());
}

#[test]
fn derived_seeds_are_distinct() {
    let seeds: std::collections::HashSet<u64> = (0..1000).map(|k| derive_seed(42, k)).collect();
    assert_eq!(seeds.len(), 1000);
    assert_eq!(derive_seed(42, 3), derive_seed(42, 3));
}

#[test]
fn herald_rate_matches_closed_form() {
    for (mode, km) in [(LinkMode::Local, 0.0), (LinkMode::Telecom, 10.0)] {
        let mut cfg = telecom(km, 0.015);
        cfg.link.mode = mode;
        let n = 1_000_000;
        let out = run_session(&cfg, TrialSpan::first(n), 5).unwrap();
        let p = herald_probability(&cfg).unwrap();
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let seen = out.total_heralds() as f64;
        assert!((seen - n as f64 * p).abs() < 4.0 * sigma, "{mode:?}: {seen} vs {}", n as f64 * p);
    }
}

#[test]
fn dark_link_never_heralds() {
    let mut cfg = telecom(5.0, 0.0);
    cfg.detectors.snspd.dark_rate_cps = 0.0;
    cfg.qfc.noise_rate_cps = 0.0;
    let out = run_session(&cfg, TrialSpan::first(100_000), 1).unwrap();
    assert_eq!(out.total_heralds(), 0);
    assert!(out.records.is_empty());
    assert!(out.write_histogram.counts.iter().all(|c| *c == 0));
}

#[test]
fn empty_span_is_empty() {
    let out = run_session(&telecom(0.0, 0.01), TrialSpan::first(0), 1).unwrap();
    assert_eq!(out.trials, 0);
    assert_eq!(out.total_coincidences(), 0);
}

#[test]
fn records_are_ordered_and_consistent() {
    let cfg = telecom(5.0, 0.02);
    let out = run_session(&cfg, TrialSpan::first(200_000), 4).unwrap();
    let model = LinkModel::new(&cfg).unwrap();
    assert!(out.records.windows(2).all(|w| w[0].trial_id < w[1].trial_id));
    let delay = cfg.herald_delay_us();
    for r in &out.records {
        assert_eq!(r.point as u64, r.trial_id % model.points.len() as u64);
        let lag = r.herald_time_us - r.write_time_us;
        assert!(lag >= delay - 0.2 - 1e-9 && lag < delay + 1e-9, "herald lag {lag}");
    }
    let with_outcome = out.records.iter().filter(|r| r.outcome.is_some()).count() as u64;
    assert_eq!(with_outcome, out.total_coincidences());
}

#[test]
fn exposures_cover_all_trials() {
    let cfg = telecom(0.0, 0.01);
    let out = run_session(&cfg, TrialSpan::first(12_345), 2).unwrap();
    assert_eq!(out.exposures.iter().sum::<u64>(), 12_345);
}

#[test]
fn coincidence_ratio_matches_model() {
    let cfg = telecom(5.0, 0.02);
    let out = run_session(&cfg, TrialSpan::first(2_000_000), 8).unwrap();
    let model = LinkModel::new(&cfg).unwrap();
    let expected: f64 = model.expectations().iter().map(|e| e.coincidences.iter().flatten().sum::<f64>()).sum::<f64>()
        / model.points.len() as f64;
    let n = out.trials as f64;
    let seen = out.total_coincidences() as f64;
    assert!((seen - n * expected).abs() < 5.0 * (n * expected).sqrt(), "{seen} vs {}", n * expected);
}

#[test]
fn summary_serializes_with_schema_version() {
    let cfg = telecom(0.0, 0.01);
    let out = run_session(&cfg, TrialSpan::first(50_000), 1).unwrap();
    let s = SessionSummary::new(&cfg, &out).unwrap();
    let json = serde_json::to_value(&s).unwrap();
    assert_eq!(json["schema_version"], SCHEMA_VERSION);
    assert_eq!(json["trials"], 50_000);
}
