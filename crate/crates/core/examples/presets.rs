//! Writes the calibrated preset configurations.
//!
//! ```text
//! cargo run -p atomlink --example presets [-- <dir>]
//! ```

use std::path::PathBuf;

use atomlink::calibration::{calibrate, calibrated_column, REFERENCE_COLUMNS};
use atomlink::config::LinkConfig;

/// File name, reference column, trials per run and an extra note.
const PRESETS: [(&str, usize, u64, &str); 6] = [
    ("local.cfg", 0, 20_000_000, ""),
    ("telecom10m.cfg", 1, 20_000_000, ""),
    ("km5.cfg", 2, 10_000_000, ""),
    ("km10.cfg", 3, 10_000_000, ""),
    ("km20.cfg", 4, 10_000_000, ""),
    ("km100_model.cfg", 4, 1_000_000, "100 km fiber; model only, the simulation heralds almost nothing"),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;
    let base = LinkConfig::default();
    let cal = calibrate(&base)?;
    for (name, column, trials, note) in PRESETS {
        let col = &REFERENCE_COLUMNS[column];
        let mut cfg = calibrated_column(&base, &cal, col);
        cfg.run.trials = Some(trials);
        cfg.run.duration_s = None;
        let mut header = format!(
            "# Reference column: {} (Vz {} ± {}, Vx {} ± {}, write-out SNR {}, {} kHz).\n",
            col.name, col.vz, col.sigma_vz, col.vx, col.sigma_vx, col.write_snr, col.repetition_rate_khz
        );
        if !note.is_empty() {
            cfg.fiber.length_km = 100.0;
            header.push_str(&format!("# {note}.\n"));
        }
        header.push_str("# Generated by `cargo run -p atomlink --example presets`.\n\n");
        std::fs::write(dir.join(name), header + &cfg.to_toml_string())?;
    }
    Ok(())
}
