//! Trial and event tables and the run summary.

use std::io::Write;

use serde::Serialize;

use super::session::SessionOutput;
use crate::analysis::{fidelity_with_error, fit_fringe, FidelityEstimate, FringeDataset, PeriodMode, VisibilityEstimate};
use crate::config::LinkConfig;
use crate::detection::{snr_from_histogram, SnrEstimate, SnrMode};
use crate::error::{Error, Result};
use crate::io::TrialRow;
use crate::node::AtomOutcome;
use crate::polarization::PbsPort;
use crate::model::{LinkModel, Prediction};
use crate::node::Basis;

pub const SCHEMA_VERSION: u32 = 1;

/// Writes `trial_id,write_time_us,herald,herald_time_us,basis,delay_us,outcome`.
pub fn write_trials_csv<W: Write>(out: &SessionOutput, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["trial_id", "write_time_us", "herald", "herald_time_us", "basis", "delay_us", "outcome"])?;
    for r in &out.records {
        w.write_record([
            r.trial_id.to_string(),
            format!("{:.4}", r.write_time_us),
            r.herald.label().to_string(),
            format!("{:.4}", r.herald_time_us),
            r.basis.label().to_string(),
            format!("{:.4}", r.delay_us),
            r.outcome.map_or("none", |o| o.label()).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `trial_id,channel,timestamp_ns,kind`.
pub fn write_events_csv<W: Write>(out: &SessionOutput, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["trial_id", "channel", "timestamp_ns", "kind"])?;
    for e in &out.events {
        w.write_record([
            e.trial_id.to_string(),
            e.channel.to_string(),
            format!("{:.3}", e.timestamp_ns),
            e.kind.label().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct SessionSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub trials: u64,
    pub heralds: u64,
    pub coincidences: u64,
    pub herald_rate: f64,
    pub sigma_herald_rate: f64,
    pub repetition_rate_khz: f64,
    /// Laboratory time covered by the trials, availability included, s.
    pub duration_s: f64,
    pub vz: Option<VisibilityEstimate>,
    pub vx: Option<VisibilityEstimate>,
    pub fidelity: Option<FidelityEstimate>,
    pub write_snr: SnrEstimate,
    pub write_snr_fwhm: SnrEstimate,
    pub readout_snr: SnrEstimate,
    pub model: Prediction,
}

impl SessionSummary {
    pub fn new(cfg: &LinkConfig, out: &SessionOutput) -> Result<Self> {
        let model = LinkModel::new(cfg)?;
        let heralds = out.total_heralds();
        let n = out.trials.max(1) as f64;
        let rate = heralds as f64 / n;
        let vz = fringe_fit(&model, out, Basis::Z);
        let vx = fringe_fit(&model, out, Basis::X);
        let fidelity = match (&vz, &vx) {
            (Some(z), Some(x)) => fidelity_with_error(
                z.v.clamp(-1.0, 1.0),
                z.sigma_v,
                x.v.clamp(-1.0, 1.0),
                x.sigma_v,
            )
            .ok(),
            _ => None,
        };
        Ok(SessionSummary {
            schema_version: SCHEMA_VERSION,
            seed: out.seed,
            trials: out.trials,
            heralds,
            coincidences: out.total_coincidences(),
            herald_rate: rate,
            sigma_herald_rate: (rate * (1.0 - rate) / n).sqrt(),
            repetition_rate_khz: model.schedule.repetition_rate_khz(),
            duration_s: out.trials as f64 / (model.schedule.effective_rate_khz() * 1e3),
            vz,
            vx,
            fidelity,
            write_snr: snr_from_histogram(&out.write_histogram, SnrMode::FullWidth),
            write_snr_fwhm: snr_from_histogram(&out.write_histogram, SnrMode::Fwhm),
            readout_snr: snr_from_histogram(&out.read_histogram, SnrMode::FullWidth),
            model: model.predict()?,
        })
    }
}

/// Fringe counts of one basis, one row per analyzer setting.
pub fn fringe_dataset(model: &LinkModel, out: &SessionOutput, basis: Basis) -> FringeDataset {
    let counts = out.fringe_counts();
    let (settings, coincidences): (Vec<f64>, Vec<f64>) = model
        .points
        .iter()
        .zip(&counts)
        .filter(|(p, _)| p.point.basis == basis)
        .map(|(p, c)| (p.point.setting, *c as f64))
        .unzip();
    FringeDataset::new(settings, coincidences)
}

/// Free-period sinusoid fit, falling back to the nominal period when the
/// free fit fails. `None` when the basis has too few settings or counts.
pub fn fringe_fit(model: &LinkModel, out: &SessionOutput, basis: Basis) -> Option<VisibilityEstimate> {
    fit_basis(model, &fringe_dataset(model, out, basis), basis)
}

/// [`fringe_fit`] on an explicit dataset of `basis`.
pub fn fit_basis(model: &LinkModel, data: &FringeDataset, basis: Basis) -> Option<VisibilityEstimate> {
    let nominal = match basis {
        Basis::Z => 90.0,
        Basis::X => model.node.larmor_period_us(),
    };
    if data.settings.is_empty() || data.total_coincidences() == 0.0 {
        return None;
    }
    fit_fringe(data, PeriodMode::Free(nominal)).or_else(|_| fit_fringe(data, PeriodMode::Fixed(nominal))).ok()
}

/// Fringe dataset of `basis` rebuilt from a trials table. Rows are assigned to
/// analyzer settings by `trial_id mod settings`, as in the simulation, and a
/// row whose basis disagrees with its setting is a schema error.
pub fn fringe_from_trials(model: &LinkModel, rows: &[TrialRow], basis: Basis) -> Result<FringeDataset> {
    let n = model.points.len() as u64;
    let mut counts = vec![0u64; model.points.len()];
    for r in rows {
        let k = (r.trial_id % n) as usize;
        if model.points[k].point.basis != r.basis {
            return Err(Error::Schema {
                column: "basis".into(),
                reason: format!("trial {} is `{}` but its analyzer setting is `{}`; wrong config?", r.trial_id, r.basis.label(), model.points[k].point.basis.label()),
            });
        }
        if matches!((r.herald, r.outcome), (PbsPort::Transmit, Some(AtomOutcome::Down)) | (PbsPort::Reflect, Some(AtomOutcome::Up))) {
            counts[k] += 1;
        }
    }
    let (settings, coincidences): (Vec<f64>, Vec<f64>) = model
        .points
        .iter()
        .zip(&counts)
        .filter(|(p, _)| p.point.basis == basis)
        .map(|(p, c)| (p.point.setting, *c as f64))
        .unzip();
    Ok(FringeDataset::new(settings, coincidences))
}
