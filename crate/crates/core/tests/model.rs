use atomlink::model::*;
use atomlink::config::{LinkConfig, LinkMode};
use atomlink::node::{retrieval_efficiency, Basis};

fn ideal(km: f64) -> LinkConfig {
    let mut c = LinkConfig::default();
    c.fiber.length_km = km;
    c.node.p_exc = 0.01;
    c.node.multi_excitation_factor = 0.0;
    c
}

#[test]
fn ideal_link_has_unit_visibility() {
    let mut c = ideal(0.0);
    c.node.readout_snr_factor = 1e30;
    c.detectors.snspd.dark_rate_cps = 0.0;
    c.detectors.apd.dark_rate_cps = 0.0;
    c.qfc.noise_rate_cps = 0.0;
    c.qfc.eta_max_h = c.qfc.eta_max_v;
    // Keep retrieval flat across the x-basis delay scan.
    c.node.tau_mem_us = 1e9;
    let m = LinkModel::new(&c).unwrap();
    assert!((m.visibility(Basis::Z).unwrap() - 1.0).abs() < 1e-9);
    assert!((m.visibility(Basis::X).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn perfect_efficiencies_herald_at_p_exc() {
    let mut c = ideal(0.0);
    c.link.mode = LinkMode::Local;
    c.link.local_path_eff = 1.0;
    c.detectors.apd.efficiency = 1.0;
    c.detectors.apd.dark_rate_cps = 0.0;
    let m = LinkModel::new(&c).unwrap();
    assert!((m.herald_probability() - 0.01).abs() < 1e-15);
}

#[test]
fn first_order_herald_formula() {
    let c = ideal(20.0);
    let m = LinkModel::new(&c).unwrap();
    let q = &c.qfc;
    let mean_eta = 0.5 * (q.eta_max_h + q.eta_max_v);
    let signal = c.node.p_exc
        * mean_eta
        * c.filter.bpf_coupling_eff
        * c.filter.analysis_eff
        * c.fiber.transmittance()
        * c.detectors.snspd.efficiency;
    let noise = 2.0 * (q.noise_rate_cps * c.fiber.transmittance() + c.detectors.snspd.dark_rate_cps) * 200e-9;
    assert!((m.herald_probability() / (signal + noise) - 1.0).abs() < 1e-3);
}

#[test]
fn readout_snr_is_factor_times_efficiency_without_herald_noise() {
    let mut c = ideal(20.0);
    c.detectors.snspd.dark_rate_cps = 0.0;
    c.detectors.apd.dark_rate_cps = 0.0;
    c.qfc.noise_rate_cps = 0.0;
    let m = LinkModel::new(&c).unwrap();
    let eta = retrieval_efficiency(m.points[0].point.readout_delay_us, &c.node).unwrap();
    // Averaged over settings: the x points sit up to one Larmor period later.
    let snr = m.readout_snr();
    assert!(snr < 1500.0 * eta * 1.001 && snr > 1500.0 * eta * 0.93, "{snr}");
}
