use std::path::Path;

use atomlink::analysis::{fidelity_with_error, FidelityEstimate, VisibilityEstimate};
use atomlink::io::read_trials_csv;
use atomlink::model::LinkModel;
use atomlink::node::Basis;
use atomlink::sequencer::{fit_basis, fringe_from_trials, SCHEMA_VERSION};
use serde::Serialize;

use crate::output::{load_config, open_input, CliResult, OutDir};

/// `analysis.json`.
#[derive(Serialize)]
struct AnalysisReport {
    schema_version: u32,
    rows: usize,
    /// Coincidences in the correlated outcome pairs, summed over both bases.
    fringe_counts: u64,
    vz: Option<VisibilityEstimate>,
    vx: Option<VisibilityEstimate>,
    fidelity: Option<FidelityEstimate>,
}

pub fn analyze(config: &Path, trials: &Path, out: &Path) -> CliResult {
    let cfg = load_config(config, None)?;
    let model = LinkModel::new(&cfg)?;
    let rows = read_trials_csv(open_input(trials)?)?;
    let dir = OutDir::create(out)?;
    let mut fits = Vec::new();
    let mut fringe_counts = 0.0;
    for basis in [Basis::Z, Basis::X] {
        let data = fringe_from_trials(&model, &rows, basis)?;
        fringe_counts += data.total_coincidences();
        let mut w = csv::Writer::from_writer(dir.writer(&format!("analysis_fringe_{}.csv", basis.label()))?);
        w.write_record(["setting", "coincidences"])?;
        for (s, c) in data.settings.iter().zip(&data.coincidences) {
            w.write_record([s.to_string(), c.to_string()])?;
        }
        w.flush()?;
        fits.push(fit_basis(&model, &data, basis));
    }
    let (vz, vx) = (fits[0], fits[1]);
    let fidelity = match (vz, vx) {
        (Some(z), Some(x)) => fidelity_with_error(z.v, z.sigma_v, x.v, x.sigma_v).ok(),
        _ => None,
    };
    let report =
        AnalysisReport { schema_version: SCHEMA_VERSION, rows: rows.len(), fringe_counts: fringe_counts as u64, vz, vx, fidelity };
    dir.write_json("analysis.json", &report)?;
    println!("rows          {}", report.rows);
    println!("fringe counts {}", report.fringe_counts);
    for (name, v) in [("Vz", vz), ("Vx", vx)] {
        match v {
            Some(v) => println!("{name:<13} {:.4} ± {:.4}", v.v, v.sigma_v),
            None => println!("{name:<13} n/a"),
        }
    }
    if let Some(f) = fidelity {
        println!("fidelity      {:.4} ± {:.4}", f.f, f.sigma_f);
    }
    Ok(())
}
