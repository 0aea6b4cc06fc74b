//! Writes the synthetic datasets used by the `fit` examples.
//!
//! ```text
//! cargo run -p atomlink --example datasets [-- <dir>]
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use atomlink::analysis::{snr_model, SnrModelParams};
use atomlink::conversion::{dfg_efficiency, Arm, QfcParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

const SEED: u64 = 20;

fn write(dir: &Path, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> std::io::Result<()> {
    let mut text = format!("{header}\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    std::fs::write(dir.join(name), text)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let noise = Normal::new(0.0, 1.0)?;

    // SNR versus length, 1% relative scatter.
    let p = SnrModelParams::default();
    let rows: Vec<String> = (0..=10)
        .map(|k| {
            let l = 10.0 * k as f64;
            let snr = snr_model(l, &p);
            let sigma = 0.01 * snr;
            format!("{l},{:.4},{:.4}", snr + sigma * noise.sample(&mut rng), sigma)
        })
        .collect();
    write(&dir, "snr.csv", "length_km,snr,sigma", rows)?;

    // Retrieval efficiency, Gaussian decay with τ = 160 µs and 2% scatter.
    let rows: Vec<String> = (0..=16)
        .map(|k| {
            let t = 25.0 * k as f64;
            let eta = 0.30 * (-(t / 160.0).powi(2)).exp() * (1.0 + 0.02 * noise.sample(&mut rng));
            format!("{t},{eta:.6e}")
        })
        .collect();
    write(&dir, "decay.csv", "time_us,efficiency", rows)?;

    // DFG efficiency curve of the H arm.
    let q = QfcParams::default();
    let rows = (1..=16)
        .map(|k| {
            let pump = 0.2 * k as f64;
            let eta = dfg_efficiency(pump, Arm::H, &q)? * (1.0 + 0.02 * noise.sample(&mut rng));
            Ok(format!("{pump:.1},{eta:.6}"))
        })
        .collect::<atomlink::Result<Vec<String>>>()?;
    write(&dir, "dfg.csv", "pump_w,efficiency", rows)?;

    // Polarization fringe, V = 0.95, period 90°.
    let rows = (0..16)
        .map(|k| {
            let setting = 11.25 * k as f64;
            let mean = 400.0 * (1.0 + 0.95 * (2.0 * PI * (setting - 10.0) / 90.0).cos());
            let counts = Poisson::new(mean.max(1e-9))?.sample(&mut rng);
            Ok(format!("{setting},{counts}"))
        })
        .collect::<Result<Vec<String>, rand_distr::PoissonError>>()?;
    write(&dir, "fringe.csv", "setting,coincidences", rows)?;
    Ok(())
}
