use atomlink::sequencer::*;
use atomlink::config::LinkConfig;
use atomlink::Error;
use atomlink::config::LinkMode;

fn telecom(km: f64) -> LinkConfig {
    let mut c = LinkConfig::default();
    c.fiber.length_km = km;
    c
}

#[test]
fn local_load_holds_one_thousand_cycles() {
    let mut c = LinkConfig::default();
    c.link.mode = LinkMode::Local;
    let s = build_schedule(&c).unwrap();
    assert_eq!(s.cycles_per_load, 1000);
    assert!((s.cycle_us - 2.95).abs() < 1e-12);
}

#[test]
fn twenty_km_load_holds_sixty_cycles() {
    let s = build_schedule(&telecom(20.0)).unwrap();
    assert_eq!(s.cycles_per_round, 15);
    assert_eq!(s.cycles_per_load, 60);
}

#[test]
fn minimal_cycle_without_wait() {
    let mut c = LinkConfig::default();
    c.link.mode = LinkMode::Local;
    c.link.local_readout_delay_us = 0.0;
    c.sequence.read_ns = 1e-9;
    let s = build_schedule(&c).unwrap();
    assert!((s.cycle_us - (2.0 + 0.05 + 0.2)).abs() < 1e-9);
}

#[test]
fn unreachable_distance_is_infeasible() {
    assert!(matches!(build_schedule(&telecom(400.0)), Err(Error::InfeasibleSchedule(_))));
}

#[test]
fn write_times_increase() {
    let s = build_schedule(&telecom(5.0)).unwrap();
    let times: Vec<f64> = (0..2000).map(|i| s.write_time_us(i)).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    // Consecutive cycles inside a round are one cycle apart.
    assert!((times[1] - times[0] - s.cycle_us).abs() < 1e-9);
}

#[test]
fn doubling_cooling_follows_duty_law() {
    let mut c = telecom(10.0);
    let s1 = build_schedule(&c).unwrap();
    c.sequence.cooling_ms *= 2.0;
    let s2 = build_schedule(&c).unwrap();
    let expected = s1.repetition_rate_khz() * s1.load_period_us / (s1.load_period_us + s1.cooling_us);
    assert!((s2.repetition_rate_khz() - expected).abs() < 1e-12);
}
