//! Write-out SNR versus fiber length.
//!
//! ```text
//! SNR(L) = (R_exc + R_noise)·T(L) / (R_noise·T(L) + R_dark),   T(L) = 10^(−λL/10)
//! ```
//!
//! Converter noise is attenuated with the signal, so only the detector dark
//! rate makes the SNR fall with distance. The ratio is unchanged when all three
//! rates are scaled together, so a fit can only determine two rate ratios;
//! `fit_snr_model` holds `R_dark` at a supplied anchor value.

use serde::{Deserialize, Serialize};

use super::lm::fit_curve;
use crate::error::{check_non_negative, Error, Result};
use crate::fiber::transmittance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnrModelParams {
    pub r_exc_cps: f64,
    pub r_noise_cps: f64,
    pub r_dark_cps: f64,
    pub atten_db_per_km: f64,
}

impl Default for SnrModelParams {
    fn default() -> Self {
        let base = SnrModelParams { r_exc_cps: 0.0, r_noise_cps: 257.0, r_dark_cps: 38.0, atten_db_per_km: 0.2 };
        let r_exc_cps = solve_r_exc(100.0, 6.9, &base).expect("reachable SNR");
        SnrModelParams { r_exc_cps, ..base }
    }
}

impl SnrModelParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_non_negative(prefix, "r_exc_cps", self.r_exc_cps)?;
        check_non_negative(prefix, "r_noise_cps", self.r_noise_cps)?;
        check_non_negative(prefix, "r_dark_cps", self.r_dark_cps)?;
        check_non_negative(prefix, "atten_db_per_km", self.atten_db_per_km)?;
        Ok(())
    }
}

pub fn snr_model(length_km: f64, p: &SnrModelParams) -> f64 {
    let t = transmittance(length_km, p.atten_db_per_km);
    let denom = p.r_noise_cps * t + p.r_dark_cps;
    if denom == 0.0 {
        return f64::INFINITY;
    }
    (p.r_exc_cps + p.r_noise_cps) * t / denom
}

/// `R_exc` such that `snr_model(length_km) = snr`.
pub fn solve_r_exc(length_km: f64, snr: f64, p: &SnrModelParams) -> Result<f64> {
    let t = transmittance(length_km, p.atten_db_per_km);
    let r = snr * (p.r_noise_cps * t + p.r_dark_cps) / t - p.r_noise_cps;
    if r < 0.0 {
        return Err(Error::invalid("snr", format!("SNR {snr} is below the noise-only value at {length_km} km")));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnrFit {
    pub params: SnrModelParams,
    pub sigma_r_exc: f64,
    pub sigma_r_noise: f64,
    pub sigma_atten: f64,
    pub residual_norm: f64,
    pub evaluations: usize,
}

/// Fits `R_exc`, `R_noise` and `λ` to `(L, SNR, σ)` points with `R_dark` fixed.
pub fn fit_snr_model(points: &[(f64, f64, f64)], r_dark_cps: f64, initial: &SnrModelParams) -> Result<SnrFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateData(format!("{} SNR points; at least 4 are needed", points.len())));
    }
    if !(r_dark_cps > 0.0) {
        return Err(Error::invalid("r_dark_cps", "the anchor dark rate must be positive"));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let s: Vec<f64> = points.iter().map(|p| p.2).collect();
    // Log-parametrized so the rates stay positive.
    let model = |l: f64, q: &[f64]| {
        let p = SnrModelParams {
            r_exc_cps: q[0].exp(),
            r_noise_cps: q[1].exp(),
            r_dark_cps,
            atten_db_per_km: q[2].exp(),
        };
        snr_model(l, &p)
    };
    let start = [
        initial.r_exc_cps.max(1.0).ln(),
        initial.r_noise_cps.max(1.0).ln(),
        initial.atten_db_per_km.max(1e-3).ln(),
    ];
    let fit = fit_curve(&x, &y, &s, &start, model)?;
    let q = &fit.params;
    let params = SnrModelParams {
        r_exc_cps: q[0].exp(),
        r_noise_cps: q[1].exp(),
        r_dark_cps,
        atten_db_per_km: q[2].exp(),
    };
    Ok(SnrFit {
        sigma_r_exc: params.r_exc_cps * fit.sigma(0),
        sigma_r_noise: params.r_noise_cps * fit.sigma(1),
        sigma_atten: params.atten_db_per_km * fit.sigma(2),
        params,
        residual_norm: fit.residual_norm,
        evaluations: fit.evaluations,
    })
}
