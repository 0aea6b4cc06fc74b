//! Entanglement fidelity from the two fringe visibilities.

use serde::Serialize;

use crate::error::{Error, Result};

/// `F = (1 + Vz + 2·Vx)/4`.
pub fn fidelity_from_visibilities(vz: f64, vx: f64) -> Result<f64> {
    for (name, v) in [("vz", vz), ("vx", vx)] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::invalid(name, format!("visibility {v} is outside [−1, 1]")));
        }
    }
    Ok((1.0 + vz + 2.0 * vx) / 4.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FidelityEstimate {
    pub f: f64,
    pub sigma_f: f64,
}

/// Fidelity with independent visibility errors propagated linearly.
pub fn fidelity_with_error(vz: f64, sigma_vz: f64, vx: f64, sigma_vx: f64) -> Result<FidelityEstimate> {
    let f = fidelity_from_visibilities(vz, vx)?;
    let sigma_f = ((sigma_vz / 4.0).powi(2) + (sigma_vx / 2.0).powi(2)).sqrt();
    Ok(FidelityEstimate { f, sigma_f })
}
