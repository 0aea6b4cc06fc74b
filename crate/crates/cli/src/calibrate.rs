use std::path::Path;

use atomlink::calibration::{calibrate as fit_reference, check_columns, Calibration, ColumnCheck};
use atomlink::config::LinkConfig;
use atomlink::sequencer::SCHEMA_VERSION;
use serde::Serialize;

use crate::output::{load_config, CliResult, OutDir};

/// `calibration.json`.
#[derive(Serialize)]
struct CalibrationReport<'a> {
    schema_version: u32,
    calibration: &'a Calibration,
    columns: &'a [ColumnCheck],
}

pub fn calibrate(config: Option<&Path>, out: &Path) -> CliResult {
    let base = match config {
        Some(p) => load_config(p, None)?,
        None => LinkConfig::default(),
    };
    let cal = fit_reference(&base)?;
    let columns = check_columns(&base, &cal)?;
    OutDir::create(out)?.write_json(
        "calibration.json",
        &CalibrationReport { schema_version: SCHEMA_VERSION, calibration: &cal, columns: &columns },
    )?;
    println!("local_path_eff           {:.6}", cal.local_path_eff);
    println!("multi_excitation_factor  {:.6}", cal.multi_excitation_factor);
    println!("raman_error              {:.6}", cal.raman_error);
    println!("coherence_tau_us         {:.2}", cal.coherence_tau_us);
    println!("phase_jitter_sigma       {:.6}", cal.phase_jitter_sigma);
    println!("p_exc (20 km)            {:.6}", cal.p_exc_20km);
    println!("read_path_eff            {:.6}", cal.read_path_eff);
    println!("availability             {:.6}", cal.availability);
    println!("Vx chi2/dof              {:.3}", cal.vx_chi2_per_dof);
    println!();
    println!("{:<8} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>8} {:>8}", "column", "Vz", "ref", "Vx", "ref", "F", "SNR", "ref", "kHz");
    for c in &columns {
        let (r, p) = (&c.column, &c.prediction);
        println!(
            "{:<8} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.1} {:>8.1} {:>8.2}",
            r.name, p.vz, r.vz, p.vx, r.vx, p.fidelity, p.write_snr, r.write_snr, p.repetition_rate_khz
        );
    }
    Ok(())
}
