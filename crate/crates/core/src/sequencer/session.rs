//! Seeded trial-by-trial simulation.
//!
//! Every trial draws from its own ChaCha8 stream selected by `(seed,
//! trial_id)`, so a trial's outcome does not depend on which other trials are
//! simulated, in what order or on how many threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::LinkConfig;
use crate::detection::{Click, ClickKind, DetectionEvent, Histogram};
use crate::error::{Error, Result};
use crate::model::{od_factor, LinkModel};
use crate::node::{evolve_atom, readout_populations, retrieval_efficiency, sample_jitter, AtomOutcome, Basis};
use crate::polarization::PbsPort;

/// RNG stream of one trial.
pub fn trial_rng(seed: u64, trial_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_id);
    rng
}

/// Seed of shard or sweep point `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.set_word_pos(1 << 40);
    rng.random()
}

/// Contiguous range of trial ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrialSpan {
    pub start: u64,
    pub count: u64,
}

impl TrialSpan {
    pub fn new(start: u64, count: u64) -> Self {
        TrialSpan { start, count }
    }

    pub fn first(count: u64) -> Self {
        TrialSpan { start: 0, count }
    }

    fn end(&self) -> u64 {
        self.start + self.count
    }
}

/// One heralded trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    /// Index into the analyzer settings.
    pub point: usize,
    pub write_time_us: f64,
    /// PBS port whose detector heralded.
    pub herald: PbsPort,
    pub herald_kind: ClickKind,
    pub herald_time_us: f64,
    pub basis: Basis,
    pub delay_us: f64,
    /// `None` when no read-out detector clicked.
    pub outcome: Option<AtomOutcome>,
    pub readout_kind: Option<ClickKind>,
}

/// Everything a session produces. Outputs of disjoint spans merge by
/// concatenation and summation.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionOutput {
    pub seed: u64,
    pub trials: u64,
    pub records: Vec<TrialRecord>,
    pub events: Vec<DetectionEvent>,
    pub write_histogram: Histogram,
    pub read_histogram: Histogram,
    /// `[point][port]` heralds.
    pub heralds: Vec<[u64; 2]>,
    /// `[point][port][outcome]` coincidences.
    pub coincidences: Vec<[[u64; 2]; 2]>,
    /// Trials simulated per analyzer point.
    pub exposures: Vec<u64>,
}

impl SessionOutput {
    fn empty(model: &LinkModel, seed: u64) -> Self {
        let n = model.points.len();
        let w = &model.herald_channels[0];
        let r = &model.read_channels[0];
        SessionOutput {
            seed,
            trials: 0,
            records: Vec::new(),
            events: Vec::new(),
            write_histogram: Histogram::empty(w.detector.window_ns, 1.0, &w.pulse),
            read_histogram: Histogram::empty(r.detector.window_ns, 1.0, &r.pulse),
            heralds: vec![[0; 2]; n],
            coincidences: vec![[[0; 2]; 2]; n],
            exposures: vec![0; n],
        }
    }

    /// Appends the results of a later span.
    pub fn merge(&mut self, other: SessionOutput) -> Result<()> {
        if other.heralds.len() != self.heralds.len() {
            return Err(Error::InvalidState("sessions have different analyzer settings".into()));
        }
        self.trials += other.trials;
        self.records.extend(other.records);
        self.events.extend(other.events);
        self.write_histogram.merge(&other.write_histogram)?;
        self.read_histogram.merge(&other.read_histogram)?;
        for i in 0..self.heralds.len() {
            self.exposures[i] += other.exposures[i];
            for k in 0..2 {
                self.heralds[i][k] += other.heralds[i][k];
                for j in 0..2 {
                    self.coincidences[i][k][j] += other.coincidences[i][k][j];
                }
            }
        }
        Ok(())
    }

    pub fn total_heralds(&self) -> u64 {
        self.heralds.iter().flatten().sum()
    }

    pub fn total_coincidences(&self) -> u64 {
        self.coincidences.iter().flatten().flatten().sum()
    }

    /// `C(T, ⇓) + C(R, ⇑)` per analyzer point.
    pub fn fringe_counts(&self) -> Vec<u64> {
        self.coincidences.iter().map(|c| c[0][0] + c[1][1]).collect()
    }
}

const CHUNK: u64 = 1 << 15;

/// Simulates `span` under `seed`.
pub fn run_session(cfg: &LinkConfig, span: TrialSpan, seed: u64) -> Result<SessionOutput> {
    let model = LinkModel::new(cfg)?;
    let sim = Simulator::new(cfg, &model)?;
    let chunks: Vec<TrialSpan> = (span.start..span.end())
        .step_by(CHUNK as usize)
        .map(|s| TrialSpan::new(s, CHUNK.min(span.end() - s)))
        .collect();
    let parts: Vec<SessionOutput> = chunks.par_iter().map(|c| sim.run_span(*c, seed)).collect();
    let mut out = SessionOutput::empty(&model, seed);
    for p in parts {
        out.merge(p)?;
    }
    Ok(out)
}

/// Splits `total` trials into `shards` consecutive spans, each run under its
/// own derived seed, and merges the results.
pub fn run_sharded(cfg: &LinkConfig, total: u64, shards: u64, master_seed: u64) -> Result<SessionOutput> {
    if shards == 0 {
        return Err(Error::invalid("shards", "must be positive"));
    }
    let model = LinkModel::new(cfg)?;
    let mut out = SessionOutput::empty(&model, master_seed);
    for k in 0..shards {
        let start = total * k / shards;
        let end = total * (k + 1) / shards;
        out.merge(run_session(cfg, TrialSpan::new(start, end - start), derive_seed(master_seed, k))?)?;
    }
    Ok(out)
}

struct Simulator<'a> {
    model: &'a LinkModel,
    /// Retrieval efficiency per analyzer point before the optical-depth drift.
    retrieval: Vec<f64>,
    od_decay_fraction: f64,
    herald_window_us: f64,
    read_window_ns: f64,
}

impl<'a> Simulator<'a> {
    fn new(cfg: &LinkConfig, model: &'a LinkModel) -> Result<Self> {
        let retrieval = model
            .points
            .iter()
            .map(|p| retrieval_efficiency(p.point.readout_delay_us, &cfg.node))
            .collect::<Result<Vec<_>>>()?;
        Ok(Simulator {
            model,
            retrieval,
            od_decay_fraction: cfg.node.od_decay_fraction,
            herald_window_us: cfg.herald_detector().window_ns * 1e-3,
            read_window_ns: cfg.detectors.apd.window_ns,
        })
    }

    fn run_span(&self, span: TrialSpan, seed: u64) -> SessionOutput {
        let mut out = SessionOutput::empty(self.model, seed);
        out.trials = span.count;
        let n = self.model.points.len() as u64;
        for id in span.start..span.end() {
            out.exposures[(id % n) as usize] += 1;
            self.trial(id, seed, &mut out);
        }
        out
    }

    fn trial(&self, id: u64, seed: u64, out: &mut SessionOutput) {
        let m = self.model;
        let mut rng = trial_rng(seed, id);
        let point_index = (id % m.points.len() as u64) as usize;
        let pm = &m.points[point_index];

        let excited = rng.random::<f64>() < m.node.p_exc;
        let photon_port = if excited {
            let u = rng.random::<f64>();
            if u < pm.port_prob[0] {
                Some(0)
            } else if u < pm.port_prob[0] + pm.port_prob[1] {
                Some(1)
            } else {
                None
            }
        } else {
            None
        };
        let clicks: [Option<Click>; 2] = [0, 1].map(|k| {
            let p_photon = if photon_port == Some(k) { 1.0 } else { 0.0 };
            m.herald_channels[k].sample(p_photon, &mut rng)
        });
        let Some((port, click)) = earliest(&clicks) else {
            return;
        };

        let schedule = &m.schedule;
        let write_time_us = schedule.write_time_us(id);
        let herald_open_us = write_time_us + schedule.herald_delay_us - self.herald_window_us;
        let herald_time_us = herald_open_us + click.offset_ns * 1e-3;
        let herald = PbsPort::BOTH[port];
        out.heralds[point_index][port] += 1;
        out.write_histogram.add(click.offset_ns);
        out.events.push(DetectionEvent {
            trial_id: id,
            channel: HERALD_LABELS[port],
            timestamp_ns: herald_time_us * 1e3,
            offset_ns: click.offset_ns,
            kind: click.kind,
        });

        // Read-out.
        let atom = match click.kind {
            ClickKind::Signal => Some(pm.atom_given_port[port]),
            _ => excited.then(|| m.pair.atom_reduced()),
        };
        let delay = pm.point.readout_delay_us;
        let eta = self.retrieval[point_index]
            * od_factor(schedule, self.od_decay_fraction, schedule.phase_offset_us(id));
        let retrieved = atom.and_then(|rho| {
            let jitter = sample_jitter(delay, &m.node, &mut rng);
            let evolved = evolve_atom(&rho, delay, &m.node, Some(jitter));
            let pops = readout_populations(&evolved, pm.point.basis, &m.node);
            let outcome = if rng.random::<f64>() < pops[0] { AtomOutcome::Down } else { AtomOutcome::Up };
            (rng.random::<f64>() < eta * m.node.outcome_weight(outcome)).then_some(outcome)
        });
        let mut read_clicks: [Option<Click>; 2] = [0, 1].map(|j| {
            let p_photon = if retrieved.map(AtomOutcome::index) == Some(j) { m.read_path_eff } else { 0.0 };
            m.read_channels[j].sample(p_photon, &mut rng)
        });
        if rng.random::<f64>() < m.readout_noise_prob {
            let j = usize::from(rng.random::<bool>());
            let noise = Click { kind: ClickKind::Noise, offset_ns: rng.random::<f64>() * self.read_window_ns };
            read_clicks[j] = match read_clicks[j] {
                Some(c) if c.offset_ns <= noise.offset_ns => Some(c),
                _ => Some(noise),
            };
        }
        let signal = read_clicks
            .iter()
            .enumerate()
            .find_map(|(j, c)| c.filter(|c| c.kind == ClickKind::Signal).map(|c| (j, c)));
        let read = signal.or_else(|| earliest(&read_clicks));
        let read_open_us = write_time_us + delay;
        let (outcome, readout_kind) = match read {
            Some((j, c)) => {
                out.coincidences[point_index][port][j] += 1;
                out.read_histogram.add(c.offset_ns);
                out.events.push(DetectionEvent {
                    trial_id: id,
                    channel: READ_LABELS[j],
                    timestamp_ns: read_open_us * 1e3 + c.offset_ns,
                    offset_ns: c.offset_ns,
                    kind: c.kind,
                });
                (Some(AtomOutcome::BOTH[j]), Some(c.kind))
            }
            None => (None, None),
        };
        out.records.push(TrialRecord {
            trial_id: id,
            point: point_index,
            write_time_us,
            herald,
            herald_kind: click.kind,
            herald_time_us,
            basis: pm.point.basis,
            delay_us: delay,
            outcome,
            readout_kind,
        });
    }
}

const HERALD_LABELS: [&str; 2] = ["herald_T", "herald_R"];
const READ_LABELS: [&str; 2] = ["read_down", "read_up"];

/// Channel index and click with the smallest offset; ties go to channel 0.
fn earliest(clicks: &[Option<Click>; 2]) -> Option<(usize, Click)> {
    match (clicks[0], clicks[1]) {
        (Some(a), Some(b)) => Some(if b.offset_ns < a.offset_ns { (1, b) } else { (0, a) }),
        (Some(a), None) => Some((0, a)),
        (None, Some(b)) => Some((1, b)),
        (None, None) => None,
    }
}
