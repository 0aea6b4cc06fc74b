use std::io::Write;
use std::path::Path;

use atomlink::config::LinkConfig;
use atomlink::model::LinkModel;
use atomlink::node::Basis;
use atomlink::sequencer::{build_schedule, run_session, write_events_csv, write_trials_csv, SessionOutput, SessionSummary, TrialSpan};
use serde::Serialize;

use crate::output::{load_config, CliResult, OutDir};
use crate::RunOverrides;

/// `summary.json`: the session summary plus the resolved configuration.
#[derive(Serialize)]
struct RunReport<'a> {
    #[serde(flatten)]
    summary: &'a SessionSummary,
    config: &'a LinkConfig,
}

pub fn trial_count(cfg: &LinkConfig) -> CliResult<u64> {
    Ok(match (cfg.run.trials, cfg.run.duration_s) {
        (Some(n), _) => n,
        (None, Some(d)) => build_schedule(cfg)?.trials_in(d),
        (None, None) => unreachable!("validated config has a run length"),
    })
}

pub fn run(config: &Path, overrides: &RunOverrides, out: &Path) -> CliResult {
    let cfg = load_config(config, Some(overrides))?;
    let trials = trial_count(&cfg)?;
    let session = run_session(&cfg, TrialSpan::first(trials), cfg.seed)?;
    let summary = SessionSummary::new(&cfg, &session)?;
    let dir = OutDir::create(out)?;
    dir.write_text("config.toml", &cfg.to_toml_string())?;
    write_trials_csv(&session, dir.writer("trials.csv")?)?;
    write_events_csv(&session, dir.writer("events.csv")?)?;
    session.write_histogram.write_csv(dir.writer("write_histogram.csv")?)?;
    session.read_histogram.write_csv(dir.writer("read_histogram.csv")?)?;
    let model = LinkModel::new(&cfg)?;
    for basis in [Basis::Z, Basis::X] {
        write_fringe_csv(&model, &session, basis, &dir)?;
    }
    dir.write_json("summary.json", &RunReport { summary: &summary, config: &cfg })?;
    print_summary(&summary);
    Ok(())
}

/// `fringe_<basis>.csv`: `setting,coincidences,heralds,expected`.
fn write_fringe_csv(model: &LinkModel, session: &SessionOutput, basis: Basis, dir: &OutDir) -> CliResult {
    let mut w = csv::Writer::from_writer(dir.writer(&format!("fringe_{}.csv", basis.label()))?);
    w.write_record(["setting", "coincidences", "heralds", "expected"])?;
    let counts = session.fringe_counts();
    for (i, e) in model.expectations().iter().enumerate() {
        if e.point.basis != basis {
            continue;
        }
        let heralds: u64 = session.heralds[i].iter().sum();
        let expected = e.fringe() * session.exposures[i] as f64;
        w.write_record([
            format!("{}", e.point.setting),
            counts[i].to_string(),
            heralds.to_string(),
            format!("{expected:.3}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn print_summary(s: &SessionSummary) {
    let mut o = std::io::stdout().lock();
    let _ = writeln!(o, "trials        {}", s.trials);
    let _ = writeln!(o, "heralds       {}  (rate {:.3e} ± {:.1e})", s.heralds, s.herald_rate, s.sigma_herald_rate);
    let _ = writeln!(o, "coincidences  {}", s.coincidences);
    let _ = writeln!(o, "rep. rate     {:.2} kHz, {:.1} s of laboratory time", s.repetition_rate_khz, s.duration_s);
    for (name, v) in [("Vz", &s.vz), ("Vx", &s.vx)] {
        match v {
            Some(v) => {
                let _ = writeln!(o, "{name:<13} {:.4} ± {:.4}", v.v, v.sigma_v);
            }
            None => {
                let _ = writeln!(o, "{name:<13} n/a");
            }
        }
    }
    if let Some(f) = &s.fidelity {
        let _ = writeln!(o, "fidelity      {:.4} ± {:.4}  (model {:.4})", f.f, f.sigma_f, s.model.fidelity);
    }
    let _ = writeln!(o, "write SNR     {:.1} (FWHM window {:.1})", s.write_snr.snr, s.write_snr_fwhm.snr);
    let _ = writeln!(o, "read-out SNR  {:.1}", s.readout_snr.snr);
}
