use std::path::Path;

use atomlink::analysis::snr_model;
use atomlink::config::{LinkConfig, LinkMode};
use atomlink::sequencer::{derive_seed, run_session, SessionSummary, TrialSpan};
use atomlink::Error;
use clap::ValueEnum;
use rayon::prelude::*;

use crate::output::{cell, load_config, CliResult, OutDir};
use crate::run::trial_count;
use crate::RunOverrides;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// `fiber.length_km`.
    #[value(name = "fiber_length")]
    FiberLength,
    /// `qfc.pump_power_w`.
    #[value(name = "pump_power")]
    PumpPower,
    /// `run.extra_storage_us`, added to every read-out delay.
    #[value(name = "delay")]
    Delay,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::FiberLength => "fiber_length",
            Axis::PumpPower => "pump_power",
            Axis::Delay => "delay",
        }
    }

    fn apply(self, cfg: &mut LinkConfig, value: f64) -> Result<(), Error> {
        match self {
            Axis::FiberLength => {
                if cfg.link.mode == LinkMode::Local {
                    return Err(Error::InvalidParameter {
                        field: "link.mode".into(),
                        reason: "a fiber_length sweep needs the telecom link".into(),
                    });
                }
                cfg.fiber.length_km = value;
            }
            Axis::PumpPower => cfg.qfc.pump_power_w = value,
            Axis::Delay => cfg.run.extra_storage_us = value,
        }
        cfg.validate()
    }
}

/// Parsed `--values` list.
#[derive(Clone, Debug, PartialEq)]
pub struct Values(pub Vec<f64>);

/// Parses `a,b,c`; blank entries are skipped, so `""` is an empty list.
pub fn parse_values(s: &str) -> Result<Values, String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Values)
}

pub const SWEEP_COLUMNS: [&str; 9] =
    ["value", "f_sim", "sigma_f_sim", "f_model", "snr_sim", "snr_model", "snr_link_model", "rep_rate_khz", "herald_rate"];

pub fn sweep(config: &Path, axis: Axis, values: &[f64], overrides: &RunOverrides, out: &Path) -> CliResult {
    let base = load_config(config, Some(overrides))?;
    let configs = values
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            axis.apply(&mut cfg, v)?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    // Each point runs under its own derived seed; results keep the input order.
    let rows = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let n = trial_count(cfg)?;
            let session = run_session(cfg, TrialSpan::first(n), derive_seed(base.seed, i as u64))?;
            Ok(row(values[i], cfg, &SessionSummary::new(cfg, &session)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut table = csv::Writer::from_writer(Vec::new());
    table.write_record(SWEEP_COLUMNS)?;
    for r in &rows {
        table.write_record(r)?;
    }
    let text = String::from_utf8(table.into_inner().map_err(|e| e.into_error())?).expect("CSV of ASCII cells");
    OutDir::create(out)?.write_text(&format!("sweep_{}.csv", axis.name()), &text)?;
    print!("{text}");
    Ok(())
}

fn row(value: f64, cfg: &LinkConfig, s: &SessionSummary) -> Vec<String> {
    let length = match cfg.link.mode {
        LinkMode::Local => 0.0,
        LinkMode::Telecom => cfg.fiber.length_km,
    };
    vec![
        format!("{value}"),
        cell(s.fidelity.map(|f| f.f)),
        cell(s.fidelity.map(|f| f.sigma_f)),
        cell(Some(s.model.fidelity)),
        cell(Some(s.write_snr.snr)),
        cell(Some(snr_model(length, &cfg.snr_model))),
        cell(Some(s.model.write_snr)),
        cell(Some(s.repetition_rate_khz)),
        cell(Some(s.herald_rate)),
    ]
}
