//! Sinusoidal fringe fits and visibility estimates.
//!
//! Counts are modeled as `y(x) = a + b·cos(2πx/P) + c·sin(2πx/P)` with Poisson
//! variances. The visibility is `V = √(b² + c²)/a` and its standard error
//! follows from the delta method:
//!
//! ```text
//! ∂V/∂a = −V/a    ∂V/∂b = b/(a·A)    ∂V/∂c = c/(a·A)    A = √(b² + c²)
//! σ_V² = ∇Vᵀ · Cov(a, b, c) · ∇V
//! ```
//!
//! The covariance comes from the weighted least-squares normal equations with
//! weights `1/ŷ`, where `ŷ` is the model prediction from a first pass.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::{fit_curve, weighted_linear};
use crate::error::{Error, Result};

/// Counts per analyzer setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeDataset {
    /// HWP angle in degrees or read-out delay in µs.
    pub settings: Vec<f64>,
    pub coincidences: Vec<f64>,
    /// Heralds per setting, used to normalize uneven exposure. Empty means
    /// equal exposure.
    pub singles: Vec<f64>,
}

impl FringeDataset {
    pub fn new(settings: Vec<f64>, coincidences: Vec<f64>) -> Self {
        FringeDataset { settings, coincidences, singles: Vec::new() }
    }

    pub fn total_coincidences(&self) -> f64 {
        self.coincidences.iter().sum()
    }

    fn validate(&self) -> Result<()> {
        if self.settings.len() != self.coincidences.len()
            || (!self.singles.is_empty() && self.singles.len() != self.settings.len())
        {
            return Err(Error::DegenerateData("settings and counts have different lengths".into()));
        }
        if self.settings.len() < 4 {
            return Err(Error::DegenerateData(format!("{} settings; at least 4 are needed", self.settings.len())));
        }
        if self.coincidences.iter().chain(&self.singles).any(|c| !(*c >= 0.0)) {
            return Err(Error::DegenerateData("counts must be non-negative".into()));
        }
        let first = self.settings[0];
        if self.settings.iter().all(|s| *s == first) {
            return Err(Error::DegenerateData("all analyzer settings are equal".into()));
        }
        if self.singles.contains(&0.0) {
            return Err(Error::DegenerateData("a setting has zero heralds".into()));
        }
        Ok(())
    }

    /// Counts rescaled to the mean exposure, with their Poisson scale factors.
    fn normalized(&self) -> (Vec<f64>, Vec<f64>) {
        if self.singles.is_empty() {
            return (self.coincidences.clone(), vec![1.0; self.coincidences.len()]);
        }
        let mean = self.singles.iter().sum::<f64>() / self.singles.len() as f64;
        let scale: Vec<f64> = self.singles.iter().map(|s| mean / s).collect();
        (self.coincidences.iter().zip(&scale).map(|(c, k)| c * k).collect(), scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "period")]
pub enum PeriodMode {
    Fixed(f64),
    /// Free period, starting from the given guess.
    Free(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub v: f64,
    pub sigma_v: f64,
    /// Setting at which the fringe peaks, in setting units.
    pub phase: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub period: f64,
    pub sigma_period: f64,
    pub chi2: f64,
    pub dof: usize,
}

/// Least-squares sinusoid through the dataset.
pub fn fit_fringe(d: &FringeDataset, period: PeriodMode) -> Result<VisibilityEstimate> {
    d.validate()?;
    let (y, scale) = d.normalized();
    match period {
        PeriodMode::Fixed(p) => fixed_period(&d.settings, &y, &scale, p),
        PeriodMode::Free(p0) => free_period(&d.settings, &y, &scale, p0),
    }
}

fn design(x: &[f64], period: f64) -> DMatrix<f64> {
    let w = 2.0 * PI / period;
    DMatrix::from_fn(x.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => (w * x[i]).cos(),
        _ => (w * x[i]).sin(),
    })
}

/// Poisson standard deviations of the normalized counts given expected raw counts.
fn poisson_sigma(expected: &[f64], scale: &[f64]) -> Vec<f64> {
    expected.iter().zip(scale).map(|(e, k)| k * (e / k).max(1.0).sqrt()).collect()
}

fn fixed_period(x: &[f64], y: &[f64], scale: &[f64], period: f64) -> Result<VisibilityEstimate> {
    if !(period > 0.0) {
        return Err(Error::invalid("period", "must be positive"));
    }
    let x_design = design(x, period);
    let (beta, _) = weighted_linear(&x_design, y, &poisson_sigma(y, scale))?;
    let predicted: Vec<f64> = (&x_design * &beta).iter().copied().collect();
    let sigma = poisson_sigma(&predicted, scale);
    let (beta, cov) = weighted_linear(&x_design, y, &sigma)?;
    let chi2 = chi_square(&x_design, &beta, y, &sigma);
    Ok(estimate([beta[0], beta[1], beta[2]], cov.fixed_view::<3, 3>(0, 0).into_owned(), period, 0.0, chi2, x.len() - 3))
}

fn free_period(x: &[f64], y: &[f64], scale: &[f64], period0: f64) -> Result<VisibilityEstimate> {
    if x.len() < 5 {
        return Err(Error::DegenerateData("a free-period fit needs at least 5 settings".into()));
    }
    let start = fixed_period(x, y, scale, period0)?;
    let w0 = 2.0 * PI / period0;
    let b0 = start.amplitude * (w0 * start.phase).cos();
    let c0 = start.amplitude * (w0 * start.phase).sin();
    let sigma = poisson_sigma(y, scale);
    let model = |t: f64, p: &[f64]| {
        let w = 2.0 * PI / p[3];
        p[0] + p[1] * (w * t).cos() + p[2] * (w * t).sin()
    };
    let fit = fit_curve(x, y, &sigma, &[start.offset, b0, c0, period0], model)?;
    let predicted: Vec<f64> = x.iter().map(|t| model(*t, &fit.params)).collect();
    let sigma = poisson_sigma(&predicted, scale);
    let fit = fit_curve(x, y, &sigma, &fit.params, model)?;
    let cov = fit
        .covariance
        .clone()
        .ok_or_else(|| Error::DegenerateData("singular covariance in free-period fit".into()))?;
    let p = &fit.params;
    let sigma_period = cov[(3, 3)].max(0.0).sqrt();
    Ok(estimate(
        [p[0], p[1], p[2]],
        cov.fixed_view::<3, 3>(0, 0).into_owned(),
        p[3].abs(),
        sigma_period,
        fit.chi2,
        x.len() - 4,
    ))
}

fn chi_square(x: &DMatrix<f64>, beta: &DVector<f64>, y: &[f64], sigma: &[f64]) -> f64 {
    let r = x * beta;
    r.iter().zip(y).zip(sigma).map(|((f, y), s)| ((f - y) / s).powi(2)).sum()
}

fn estimate(
    abc: [f64; 3],
    cov: nalgebra::Matrix3<f64>,
    period: f64,
    sigma_period: f64,
    chi2: f64,
    dof: usize,
) -> VisibilityEstimate {
    let [a, b, c] = abc;
    let amplitude = b.hypot(c);
    let (v, sigma_v) = if a.abs() > 0.0 && amplitude > 0.0 {
        let v = amplitude / a;
        let g = nalgebra::Vector3::new(-v / a, b / (a * amplitude), c / (a * amplitude));
        (v, (g.transpose() * cov * g)[(0, 0)].max(0.0).sqrt())
    } else if a.abs() > 0.0 {
        // Zero amplitude: the gradient is undefined, use the radial bound.
        (0.0, (cov[(1, 1)] + cov[(2, 2)]).max(0.0).sqrt() / a.abs())
    } else {
        (0.0, f64::INFINITY)
    };
    let phase = (c.atan2(b) / (2.0 * PI) * period).rem_euclid(period);
    VisibilityEstimate {
        v: v.clamp(-1.0, 1.0),
        sigma_v,
        phase,
        offset: a,
        amplitude,
        period,
        sigma_period,
        chi2,
        dof,
    }
}
