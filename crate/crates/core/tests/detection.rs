use atomlink::detection::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn perfect_detector_always_fires_on_signal() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let det = DetectorParams { efficiency: 1.0, dark_rate_cps: 0.0, ..DetectorParams::snspd() };
    for _ in 0..10_000 {
        let c = sample_click(1.0, &det, 200.0, &mut rng).unwrap();
        assert_eq!(c.kind, ClickKind::Signal);
    }
}

#[test]
fn dark_click_probability() {
    let p = background_click_probability(30.0, 200.0);
    assert!((p - 6.0e-6).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let det = DetectorParams::snspd();
    let n = 10_000_000u64;
    let hits = (0..n).filter(|_| sample_click(0.0, &det, 200.0, &mut rng).is_some()).count() as f64;
    let sigma = (n as f64 * p).sqrt();
    assert!((hits - n as f64 * p).abs() < 4.0 * sigma, "{hits}");
}

#[test]
fn click_rate_matches_union_of_signal_and_background() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ch = Channel::new(DetectorParams::snspd(), 1e5, PulseShape::default());
    let p_sig = 0.3 * 0.88;
    let p_bg = ch.background_probability();
    let expect = 1.0 - (1.0 - p_sig) * (1.0 - p_bg);
    let n = 1_000_000;
    let hits = (0..n).filter(|_| ch.sample(0.3, &mut rng).is_some()).count() as f64 / n as f64;
    let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
    assert!((hits - expect).abs() < 4.0 * sigma);
}

#[test]
fn histogram_basics() {
    let pulse = PulseShape::default();
    let h = build_histogram(&[], 1.0, 200.0, &pulse);
    assert_eq!(h.total(), 0);
    let h = build_histogram(&[17.6], 1.0, 200.0, &pulse);
    assert_eq!(h.counts[17], 1);
    assert_eq!(h.total(), 1);
}

#[test]
fn pulse_mass_and_windows() {
    let p = PulseShape::default();
    let (a, b) = p.full_width_window();
    assert_eq!((a, b), (25.0, 115.0));
    assert!((p.mass_between(a, b) - 1.0).abs() < 1e-12);
    let (fa, fb) = p.fwhm_window();
    let frac = p.mass_between(fa, fb);
    assert!((0.6..0.8).contains(&frac), "{frac}");
}

#[test]
fn flat_histogram_has_zero_snr() {
    let pulse = PulseShape::default();
    let mut h = Histogram::empty(200.0, 1.0, &pulse);
    h.counts.iter_mut().for_each(|c| *c = 100);
    assert!(snr_from_histogram(&h, SnrMode::FullWidth).snr.abs() < 1e-12);
    h.counts.iter_mut().for_each(|c| *c = 0);
    h.counts[50] = 5;
    assert!(snr_from_histogram(&h, SnrMode::FullWidth).snr.is_infinite());
}

#[test]
fn synthetic_pulse_counts_and_fwhm_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pulse = PulseShape::default();
    let mut h = Histogram::empty(200.0, 1.0, &pulse);
    let n_signal = 200_000;
    for _ in 0..n_signal {
        h.add(pulse.sample(&mut rng));
    }
    let bg_per_bin = 50.0;
    for _ in 0..(bg_per_bin as usize * 200) {
        h.add(rng.random::<f64>() * 200.0);
    }
    let full = snr_from_histogram(&h, SnrMode::FullWidth);
    let expected_in_window = n_signal as f64 + bg_per_bin * 90.0;
    let observed: f64 = full.signal_counts + full.background_per_bin * full.window_bins as f64;
    assert!((observed - expected_in_window).abs() < 3.0 * expected_in_window.sqrt());
    let fwhm = snr_from_histogram(&h, SnrMode::Fwhm);
    let ratio = fwhm.snr / full.snr;
    assert!((1.6..=2.4).contains(&ratio), "{ratio}");
    let fraction = fwhm.signal_counts / full.signal_counts;
    assert!((0.6..=0.8).contains(&fraction), "{fraction}");
}

#[test]
fn snr_is_scale_invariant() {
    let pulse = PulseShape::default();
    let mut h = Histogram::empty(200.0, 1.0, &pulse);
    for (i, c) in h.counts.iter_mut().enumerate() {
        *c = if (25..115).contains(&i) { 40 } else { 4 };
    }
    let mut h3 = h.clone();
    h3.counts.iter_mut().for_each(|c| *c *= 3);
    let a = snr_from_histogram(&h, SnrMode::FullWidth).snr;
    let b = snr_from_histogram(&h3, SnrMode::FullWidth).snr;
    assert!((a - b).abs() < 1e-12);
    assert!((a - 9.0).abs() < 1e-12);
}

#[test]
fn csv_export_has_annotations() {
    let pulse = PulseShape::default();
    let h = build_histogram(&[1.5], 1.0, 4.0, &pulse);
    let mut buf = Vec::new();
    h.write_csv(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("# bin_width_ns=1\n# full_width_window_ns=25,115\n"));
    assert!(s.contains("bin_start_ns,count\n0,0\n1,1\n"));
}
