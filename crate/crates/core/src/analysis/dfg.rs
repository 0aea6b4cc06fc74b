//! Conversion efficiency versus pump power, `η(P) = η_max·sin²(√(α·P)·Lc)`.

use serde::Serialize;

use super::lm::fit_curve;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EfficiencyCurveFit {
    pub eta_max: f64,
    pub sigma_eta_max: f64,
    /// W⁻¹·mm⁻².
    pub alpha_nor: f64,
    /// `(π/2)²/(α·Lc²)`, W.
    pub p_peak_w: f64,
    pub sigma_p_peak_w: f64,
    pub residual_norm: f64,
}

/// Fits `(pump W, efficiency)` points for a crystal of `crystal_length_mm`.
pub fn fit_efficiency_curve(points: &[(f64, f64)], crystal_length_mm: f64) -> Result<EfficiencyCurveFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateData(format!("{} points; at least 3 are needed", points.len())));
    }
    if points.iter().any(|p| p.0 < 0.0) {
        return Err(Error::DegenerateData("pump powers must be non-negative".into()));
    }
    let p_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if p_max == 0.0 {
        return Err(Error::DegenerateData("all pump powers are zero".into()));
    }
    let lc = crystal_length_mm;
    // `s = √α·Lc`; the peak power `(π/2)²/s²` has `|dP/ds| = 2P/s`.
    let to_fit = |s: f64, eta_max: f64, residual_norm: f64, sigma_eta_max: f64, sigma_s: f64| {
        let alpha_nor = (s / lc).powi(2);
        let p_peak_w = std::f64::consts::FRAC_PI_2.powi(2) / (alpha_nor * lc * lc);
        EfficiencyCurveFit {
            eta_max,
            sigma_eta_max,
            alpha_nor,
            p_peak_w,
            sigma_p_peak_w: 2.0 * p_peak_w / s * sigma_s,
            residual_norm,
        }
    };
    // Grid over the peak power, η_max by linear least squares at each point.
    let mut best = (f64::INFINITY, 1.0, 0.0);
    for k in 1..=400 {
        let p_peak = p_max * 3.0 * k as f64 / 400.0;
        let s = std::f64::consts::FRAC_PI_2 / p_peak.sqrt();
        let basis: Vec<f64> = points.iter().map(|p| (s * p.0.sqrt()).sin().powi(2)).collect();
        let bb: f64 = basis.iter().map(|b| b * b).sum();
        if bb == 0.0 {
            continue;
        }
        let m = basis.iter().zip(points).map(|(b, p)| b * p.1).sum::<f64>() / bb;
        let r: f64 = basis.iter().zip(points).map(|(b, p)| (m * b - p.1).powi(2)).sum();
        if r < best.0 {
            best = (r, s, m);
        }
    }
    let (r0, s0, m0) = best;
    if m0 == 0.0 {
        return Ok(to_fit(s0, 0.0, r0.sqrt(), f64::NAN, f64::NAN));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ones = vec![1.0; x.len()];
    let fit = fit_curve(&x, &y, &ones, &[m0, s0], |p, q| q[0] * (q[1] * p.sqrt()).sin().powi(2))?;
    let n = x.len();
    Ok(to_fit(fit.params[1].abs(), fit.params[0], fit.residual_norm, fit.scaled_sigma(0, n), fit.scaled_sigma(1, n)))
}
