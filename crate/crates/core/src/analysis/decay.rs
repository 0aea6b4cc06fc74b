//! Retrieval-efficiency decay fits.
//!
//! Both envelopes are fitted with the decay rate as a free parameter that may
//! reach zero, so flat data gives an infinite lifetime instead of a failed fit:
//! `η0·exp(−u·t²)` with `τ = u^(−1/2)` and `η0·exp(−u·t)` with `τ = 1/u`.

use serde::Serialize;

use super::lm::fit_curve;
use crate::error::{Error, Result};
use crate::node::DecayShape;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShapeFit {
    pub eta0: f64,
    pub sigma_eta0: f64,
    /// 1/e time, µs. `f64::INFINITY` for data without decay.
    pub tau_us: f64,
    pub sigma_tau_us: f64,
    pub residual_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub gaussian: ShapeFit,
    pub exponential: ShapeFit,
    /// Shape with the smaller residual.
    pub best: DecayShape,
}

pub fn fit_decay(points: &[(f64, f64)]) -> Result<DecayFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateData(format!("{} decay points; at least 4 are needed", points.len())));
    }
    let t0 = points[0].0;
    if points.iter().all(|p| p.0 == t0) {
        return Err(Error::DegenerateData("all storage times are equal".into()));
    }
    if points.iter().any(|p| p.0 < 0.0 || !(p.1 > 0.0)) {
        return Err(Error::DegenerateData("times must be non-negative and efficiencies positive".into()));
    }
    let gaussian = fit_shape(points, 2)?;
    let exponential = fit_shape(points, 1)?;
    let best =
        if gaussian.residual_norm <= exponential.residual_norm { DecayShape::Gaussian } else { DecayShape::Exponential };
    Ok(DecayFit { gaussian, exponential, best })
}

fn fit_shape(points: &[(f64, f64)], power: i32) -> Result<ShapeFit> {
    let x: Vec<f64> = points.iter().map(|p| p.0.powi(power)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    // Start from the log-linear regression ln η = ln η0 − u·x.
    let n = x.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let u0 = (-sxy / sxx).max(0.0);
    let eta0_start = (my + u0 * mx).exp();
    let ones = vec![1.0; x.len()];
    let model = |s: f64, p: &[f64]| p[0] * (-p[1] * s).exp();
    let n = x.len();
    let (eta0, u, residual_norm, sigma_eta0, sigma_u) = match fit_curve(&x, &y, &ones, &[eta0_start, u0], model) {
        Ok(f) => (f.params[0], f.params[1], f.residual_norm, f.scaled_sigma(0, n), f.scaled_sigma(1, n)),
        // A perfectly flat series can stall the solver at its start point.
        Err(Error::NoConvergence { .. }) if u0 == 0.0 => {
            (eta0_start, 0.0, residual(&x, &y, eta0_start, 0.0), f64::NAN, f64::NAN)
        }
        Err(e) => return Err(e),
    };
    let k = 1.0 / f64::from(power);
    let (tau_us, sigma_tau_us) = if u <= 1e-15 {
        (f64::INFINITY, f64::NAN)
    } else {
        // τ = u^(−k), |dτ/du| = k·τ/u.
        let tau = u.powf(-k);
        (tau, k * tau / u * sigma_u)
    };
    Ok(ShapeFit { eta0, sigma_eta0, tau_us, sigma_tau_us, residual_norm })
}

fn residual(x: &[f64], y: &[f64], eta0: f64, u: f64) -> f64 {
    x.iter().zip(y).map(|(s, v)| (eta0 * (-u * s).exp() - v).powi(2)).sum::<f64>().sqrt()
}
