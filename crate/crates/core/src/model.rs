//! Closed-form expectations for a configured link.
//!
//! [`LinkModel`] precomputes everything the simulator needs per analyzer
//! setting (port probabilities, conditioned atomic states, channels) and gives
//! the expected herald and coincidence probabilities per trial. Herald
//! probabilities are exact for the simulated process. Coincidence
//! probabilities are first order in the background: double clicks are
//! neglected.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{fidelity_from_visibilities, fit_fringe, FringeDataset, PeriodMode};
use crate::config::{LinkConfig, LinkMode};
use crate::conversion::{conversion_operator, conversion_phase_difference, dfg_efficiency, Arm};
use crate::detection::{Channel, PulseShape};
use crate::error::Result;
use crate::node::{evolve_atom, initial_state, readout_populations, retrieval_efficiency, Basis, NodeParams};
use crate::polarization::{projector, AnalyzerSetting, Matrix, PbsPort};
use crate::sequencer::{build_schedule, Schedule};
use crate::state::{Matrix2c, TwoQubitState};

/// One analyzer configuration of the fringe scans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyzerPoint {
    pub basis: Basis,
    /// HWP angle in degrees (z) or read-out delay in µs (x).
    pub setting: f64,
    #[serde(skip)]
    pub analyzer: AnalyzerSetting,
    pub readout_delay_us: f64,
}

/// z settings first, then x settings.
pub fn analyzer_points(cfg: &LinkConfig) -> Vec<AnalyzerPoint> {
    let base = cfg.herald_delay_us() + cfg.run.extra_storage_us;
    let z = cfg.run.z_hwp_deg.iter().map(|&deg| AnalyzerPoint {
        basis: Basis::Z,
        setting: deg,
        analyzer: AnalyzerSetting::with_qwp(FRAC_PI_4, deg.to_radians()),
        readout_delay_us: base,
    });
    let x = cfg.x_extra_delays_us().into_iter().map(|extra| AnalyzerPoint {
        basis: Basis::X,
        setting: base + extra,
        analyzer: AnalyzerSetting::hwp(0.0),
        readout_delay_us: base + extra,
    });
    z.chain(x).collect()
}

/// Per-setting quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct PointModel {
    pub point: AnalyzerPoint,
    /// Probability that the write-out photon of an excited trial reaches
    /// each PBS port (detector efficiency excluded).
    pub port_prob: [f64; 2],
    /// Normalized atomic state given the photon left through each port.
    pub atom_given_port: [Matrix2c; 2],
    /// Mean retrieval efficiency at this read-out delay.
    pub retrieval: f64,
}

#[derive(Clone, Debug)]
pub struct LinkModel {
    pub node: NodeParams,
    pub pair: TwoQubitState,
    /// Jones operator acting on the write-out photon before the analyzer.
    pub photon_operator: Matrix,
    /// Scalar transmission after `photon_operator`, up to the detectors.
    pub path_eff: f64,
    pub herald_channels: [Channel; 2],
    pub read_channels: [Channel; 2],
    /// Read-out path efficiency before the APDs.
    pub read_path_eff: f64,
    /// Probability of a read-out background click per read attempt.
    pub readout_noise_prob: f64,
    pub schedule: Schedule,
    pub points: Vec<PointModel>,
}

/// Expected rates for one setting, per trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointExpectation {
    pub point: AnalyzerPoint,
    /// Heralds per port.
    pub heralds: [f64; 2],
    /// `[port][outcome]` coincidences.
    pub coincidences: [[f64; 2]; 2],
}

impl PointExpectation {
    /// `C(T, ⇓) + C(R, ⇑)`, the fringe observable.
    pub fn fringe(&self) -> f64 {
        self.coincidences[0][0] + self.coincidences[1][1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub vz: f64,
    pub vx: f64,
    pub fidelity: f64,
    pub herald_probability: f64,
    pub write_snr: f64,
    pub readout_snr: f64,
    /// Coincidences per herald.
    pub coincidence_ratio: f64,
    pub repetition_rate_khz: f64,
}

impl LinkModel {
    pub fn new(cfg: &LinkConfig) -> Result<Self> {
        cfg.validate()?;
        let schedule = build_schedule(cfg)?;
        let pair = initial_state(&cfg.node)?;
        let (photon_operator, path_eff, noise_cps) = match cfg.link.mode {
            LinkMode::Local => (Matrix::identity(), cfg.link.local_path_eff, 0.0),
            LinkMode::Telecom => {
                let q = &cfg.qfc;
                let eta_h = dfg_efficiency(q.pump_power_w, Arm::H, q)?;
                let eta_v = dfg_efficiency(q.pump_power_w, Arm::V, q)?;
                let op = conversion_operator(eta_h, eta_v, conversion_phase_difference(&cfg.sagnac));
                let t = cfg.fiber.transmittance();
                let path = cfg.filter.bpf_coupling_eff * cfg.filter.analysis_eff * t;
                // Converter noise scales with pump power and is attenuated with the signal.
                (op, path, q.noise_rate_cps * q.pump_power_w / q.p_peak_w * t)
            }
        };
        let herald = Channel::new(cfg.herald_detector().clone(), noise_cps, cfg.pulses.write.clone());
        let read = Channel::new(cfg.detectors.apd.clone(), 0.0, cfg.pulses.read.clone());
        let read_eff = cfg.readout.read_path_eff * cfg.detectors.apd.efficiency;
        let readout_noise_prob = (read_eff * window_to_pulse_ratio(&cfg.pulses.read, cfg.detectors.apd.window_ns)
            / cfg.node.readout_snr_factor)
            .min(1.0);
        let od_factor = mean_od_factor(&schedule, cfg.node.od_decay_fraction);
        let points = analyzer_points(cfg)
            .into_iter()
            .map(|point| {
                let mut port_prob = [0.0; 2];
                let mut atom_given_port = [Matrix2c::zeros(); 2];
                for port in PbsPort::BOTH {
                    let branch = pair.atom_given_photon(&photon_operator, &projector(&point.analyzer, port));
                    let weight = branch.trace().re;
                    port_prob[port.index()] = weight * path_eff;
                    atom_given_port[port.index()] =
                        if weight > 0.0 { branch / Complex64::new(weight, 0.0) } else { pair.atom_reduced() };
                }
                let retrieval = retrieval_efficiency(point.readout_delay_us, &cfg.node)? * od_factor;
                Ok(PointModel { point, port_prob, atom_given_port, retrieval })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LinkModel {
            node: cfg.node.clone(),
            pair,
            photon_operator,
            path_eff,
            herald_channels: [herald.clone(), herald],
            read_channels: [read.clone(), read],
            read_path_eff: cfg.readout.read_path_eff,
            readout_noise_prob,
            schedule,
            points,
        })
    }

    /// Probability that the photon of an excited trial is detected at all.
    pub fn photon_detection_probability(&self) -> f64 {
        let p = &self.points[0];
        p.port_prob[0] * self.herald_channels[0].detector.efficiency
            + p.port_prob[1] * self.herald_channels[1].detector.efficiency
    }

    /// Exact probability of at least one click in either herald channel.
    pub fn herald_probability(&self) -> f64 {
        let none = (1.0 - self.node.p_exc * self.photon_detection_probability())
            * self.herald_channels.iter().map(|c| 1.0 - c.background_probability()).product::<f64>();
        1.0 - none
    }

    /// Read-out click probability per APD channel for a stored atom (or none).
    pub fn readout_probabilities(&self, atom: Option<&Matrix2c>, point: &PointModel) -> [f64; 2] {
        let d = self.read_path_eff * self.read_channels[0].detector.efficiency;
        let signal = atom.map_or([0.0; 2], |rho| {
            let evolved = evolve_atom(rho, point.point.readout_delay_us, &self.node, None);
            let pops = readout_populations(&evolved, point.point.basis, &self.node);
            [
                point.retrieval * self.node.eta_down * pops[0] * d,
                point.retrieval * self.node.eta_up * pops[1] * d,
            ]
        });
        let miss = 1.0 - signal[0] - signal[1];
        let mut out = [0.0; 2];
        for j in 0..2 {
            out[j] = signal[j] + miss * (self.readout_noise_prob / 2.0 + self.read_channels[j].background_probability());
        }
        out
    }

    pub fn expectation(&self, point: &PointModel) -> PointExpectation {
        let p = self.node.p_exc;
        let reduced = self.pair.atom_reduced();
        let empty = self.readout_probabilities(None, point);
        let mixed = self.readout_probabilities(Some(&reduced), point);
        let mut heralds = [0.0; 2];
        let mut coincidences = [[0.0; 2]; 2];
        for k in 0..2 {
            let signal = p * point.port_prob[k] * self.herald_channels[k].detector.efficiency;
            let background = self.herald_channels[k].background_probability();
            heralds[k] = signal + background;
            let conditioned = self.readout_probabilities(Some(&point.atom_given_port[k]), point);
            for j in 0..2 {
                coincidences[k][j] = signal * conditioned[j] + background * (p * mixed[j] + (1.0 - p) * empty[j]);
            }
        }
        PointExpectation { point: point.point, heralds, coincidences }
    }

    pub fn expectations(&self) -> Vec<PointExpectation> {
        self.points.iter().map(|p| self.expectation(p)).collect()
    }

    /// Noiseless fringe visibility in `basis` from the expected counts.
    pub fn visibility(&self, basis: Basis) -> Result<f64> {
        let rows: Vec<PointExpectation> = self.expectations().into_iter().filter(|e| e.point.basis == basis).collect();
        let dataset = FringeDataset::new(
            rows.iter().map(|e| e.point.setting).collect(),
            rows.iter().map(|e| e.fringe() * 1e9).collect(),
        );
        let period = match basis {
            Basis::Z => 90.0,
            Basis::X => self.node.larmor_period_us(),
        };
        Ok(fit_fringe(&dataset, PeriodMode::Fixed(period))?.v)
    }

    /// Write-out SNR in the full-width window, per 1-ns bin.
    pub fn write_snr(&self) -> f64 {
        let c = &self.herald_channels[0];
        let signal = self.node.p_exc * self.photon_detection_probability();
        let background: f64 = self.herald_channels.iter().map(|c| c.background_probability()).sum();
        per_bin_snr(signal, background, &c.pulse, c.detector.window_ns)
    }

    /// Read-out SNR over all heralded trials, per 1-ns bin.
    pub fn readout_snr(&self) -> f64 {
        let (mut signal, mut background) = (0.0, 0.0);
        let d = self.read_path_eff * self.read_channels[0].detector.efficiency;
        for point in &self.points {
            let e = self.expectation(point);
            for k in 0..2 {
                let sig_herald = self.node.p_exc * point.port_prob[k] * self.herald_channels[k].detector.efficiency;
                let rho = &point.atom_given_port[k];
                let pops = readout_populations(
                    &evolve_atom(rho, point.point.readout_delay_us, &self.node, None),
                    point.point.basis,
                    &self.node,
                );
                let s = point.retrieval * d * (self.node.eta_down * pops[0] + self.node.eta_up * pops[1]);
                let bg_herald = e.heralds[k] - sig_herald;
                signal += sig_herald * s + bg_herald * self.node.p_exc * point.retrieval * d;
                background += e.heralds[k]
                    * (self.readout_noise_prob
                        + self.read_channels.iter().map(|c| c.background_probability()).sum::<f64>());
            }
        }
        let c = &self.read_channels[0];
        per_bin_snr(signal, background, &c.pulse, c.detector.window_ns)
    }

    pub fn predict(&self) -> Result<Prediction> {
        let vz = self.visibility(Basis::Z)?;
        let vx = self.visibility(Basis::X)?;
        let rows = self.expectations();
        let heralds: f64 = rows.iter().map(|e| e.heralds[0] + e.heralds[1]).sum();
        let coincidences: f64 = rows.iter().flat_map(|e| e.coincidences.iter().flatten()).sum();
        Ok(Prediction {
            vz,
            vx,
            fidelity: fidelity_from_visibilities(vz.clamp(-1.0, 1.0), vx.clamp(-1.0, 1.0))?,
            herald_probability: self.herald_probability(),
            write_snr: self.write_snr(),
            readout_snr: self.readout_snr(),
            coincidence_ratio: coincidences / heralds,
            repetition_rate_khz: self.schedule.repetition_rate_khz(),
        })
    }
}

/// Ratio of the detection record to the pulse's full width, used to spread a
/// window-integrated background over the record.
fn window_to_pulse_ratio(pulse: &PulseShape, window_ns: f64) -> f64 {
    let (a, b) = pulse.full_width_window();
    window_ns / (b - a)
}

/// `(signal per bin − 0)/background per bin` for a uniform background spread
/// over the record and a pulse confined to its full-width window.
fn per_bin_snr(signal: f64, background: f64, pulse: &PulseShape, window_ns: f64) -> f64 {
    if background <= 0.0 {
        return f64::INFINITY;
    }
    signal / background * window_to_pulse_ratio(pulse, window_ns)
}

/// Mean of `1 − f·t/T` over the write times of one load.
fn mean_od_factor(schedule: &Schedule, fraction: f64) -> f64 {
    if fraction == 0.0 {
        return 1.0;
    }
    let n = schedule.cycles_per_load;
    let mean_offset = (0..n).map(|i| schedule.phase_offset_us(i)).sum::<f64>() / n as f64;
    1.0 - fraction * mean_offset / schedule.phase_us
}

/// Retrieval-efficiency scale for a write at `phase_offset_us` into the phase.
pub fn od_factor(schedule: &Schedule, fraction: f64, phase_offset_us: f64) -> f64 {
    1.0 - fraction * phase_offset_us / schedule.phase_us
}
