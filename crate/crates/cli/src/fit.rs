use std::path::Path;

use atomlink::analysis::{
    fit_decay, fit_efficiency_curve, fit_fringe, fit_snr_model, FringeDataset, PeriodMode, SnrModelParams,
};
use atomlink::conversion::QfcParams;
use atomlink::io::read_table;
use atomlink::sequencer::SCHEMA_VERSION;
use serde::Serialize;
use serde_json::Value;

use crate::output::{open_input, CliResult, OutDir};
use crate::FitKind;

pub struct FitOptions {
    pub r_dark: f64,
    pub crystal_mm: Option<f64>,
    pub period: f64,
    pub fixed_period: bool,
}

/// `fit_<kind>.json`.
#[derive(Serialize)]
struct FitReport {
    schema_version: u32,
    kind: &'static str,
    points: usize,
    result: Value,
}

impl FitKind {
    fn name(self) -> &'static str {
        match self {
            FitKind::Snr => "snr",
            FitKind::Decay => "decay",
            FitKind::Dfg => "dfg",
            FitKind::Fringe => "fringe",
        }
    }
}

pub fn fit(kind: FitKind, data: &Path, opts: &FitOptions, out: &Path) -> CliResult {
    let src = open_input(data)?;
    let (points, result) = match kind {
        FitKind::Snr => {
            let t = read_table(src, &["length_km", "snr"], &["sigma"])?;
            let (l, snr) = (t.column("length_km")?, t.column("snr")?);
            // Unweighted when no uncertainties are given.
            let sigma = t.optional("sigma").map_or_else(|| vec![1.0; t.rows()], <[f64]>::to_vec);
            let pts: Vec<_> = (0..t.rows()).map(|i| (l[i], snr[i], sigma[i])).collect();
            (t.rows(), serde_json::to_value(fit_snr_model(&pts, opts.r_dark, &SnrModelParams::default())?)?)
        }
        FitKind::Decay => {
            let t = read_table(src, &["time_us", "efficiency"], &[])?;
            let pts = pairs(t.column("time_us")?, t.column("efficiency")?);
            (t.rows(), serde_json::to_value(fit_decay(&pts)?)?)
        }
        FitKind::Dfg => {
            let t = read_table(src, &["pump_w", "efficiency"], &[])?;
            let pts = pairs(t.column("pump_w")?, t.column("efficiency")?);
            let crystal = opts.crystal_mm.unwrap_or(QfcParams::default().crystal_length_mm);
            (t.rows(), serde_json::to_value(fit_efficiency_curve(&pts, crystal)?)?)
        }
        FitKind::Fringe => {
            let t = read_table(src, &["setting", "coincidences"], &["heralds"])?;
            let mut d = FringeDataset::new(t.column("setting")?.to_vec(), t.column("coincidences")?.to_vec());
            if let Some(h) = t.optional("heralds") {
                d.singles = h.to_vec();
            }
            let mode = if opts.fixed_period { PeriodMode::Fixed(opts.period) } else { PeriodMode::Free(opts.period) };
            (t.rows(), serde_json::to_value(fit_fringe(&d, mode)?)?)
        }
    };
    let report = FitReport { schema_version: SCHEMA_VERSION, kind: kind.name(), points, result };
    OutDir::create(out)?.write_json(&format!("fit_{}.json", kind.name()), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn pairs(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().copied().zip(y.iter().copied()).collect()
}
