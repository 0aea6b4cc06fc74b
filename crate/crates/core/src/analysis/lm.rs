//! Weighted nonlinear least squares on top of `levenberg-marquardt`.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};

use crate::error::{Error, Result};

/// Result of a curve fit.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveFit {
    pub params: Vec<f64>,
    /// `(JᵀWJ)⁻¹` at the solution; `None` when singular.
    pub covariance: Option<DMatrix<f64>>,
    /// `Σ ((y − f)/σ)²`.
    pub chi2: f64,
    pub residual_norm: f64,
    pub evaluations: usize,
}

impl CurveFit {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance.as_ref().map_or(f64::NAN, |c| c[(i, i)].max(0.0).sqrt())
    }

    /// Standard error for a fit with unit weights: `sigma(i)` scaled by the
    /// residual standard deviation `√(χ²/(n − p))`. Zero for an exact fit.
    pub fn scaled_sigma(&self, i: usize, points: usize) -> f64 {
        let dof = points.saturating_sub(self.params.len());
        if dof == 0 {
            return f64::NAN;
        }
        self.sigma(i) * (self.chi2 / dof as f64).sqrt()
    }
}

struct Problem<'a, F> {
    x: &'a [f64],
    y: &'a [f64],
    sigma: &'a [f64],
    model: F,
    params: DVector<f64>,
}

impl<F: Fn(f64, &[f64]) -> f64> Problem<'_, F> {
    fn residual_at(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).zip(self.sigma).map(|((&x, &y), &s)| ((self.model)(x, p) - y) / s),
        )
    }

    fn jacobian_at(&self, p: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.x.len(), p.len());
        let mut q = p.to_vec();
        for k in 0..p.len() {
            let h = 1e-7 * p[k].abs().max(1e-7);
            q[k] = p[k] + h;
            let plus = self.residual_at(&q);
            q[k] = p[k] - h;
            let minus = self.residual_at(&q);
            q[k] = p[k];
            j.set_column(k, &((plus - minus) / (2.0 * h)));
        }
        j
    }
}

impl<F: Fn(f64, &[f64]) -> f64> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_, F> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.params.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.params.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = self.residual_at(self.params.as_slice());
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let j = self.jacobian_at(self.params.as_slice());
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

/// Minimizes `Σ ((model(xᵢ, p) − yᵢ)/σᵢ)²` starting from `initial`.
pub fn fit_curve<F>(x: &[f64], y: &[f64], sigma: &[f64], initial: &[f64], model: F) -> Result<CurveFit>
where
    F: Fn(f64, &[f64]) -> f64,
{
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(Error::DegenerateData("x, y and sigma lengths differ".into()));
    }
    if x.len() < initial.len() {
        return Err(Error::DegenerateData(format!(
            "{} points cannot determine {} parameters",
            x.len(),
            initial.len()
        )));
    }
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::DegenerateData("uncertainties must be positive".into()));
    }
    let problem = Problem { x, y, sigma, model, params: DVector::from_column_slice(initial) };
    let (problem, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
    let r = problem.residual_at(problem.params.as_slice());
    let residual_norm = r.norm();
    if !report.termination.was_successful() {
        return Err(Error::NoConvergence { iterations: report.number_of_evaluations, residual_norm });
    }
    Ok(finish(&problem, residual_norm, report.number_of_evaluations))
}

fn finish<F: Fn(f64, &[f64]) -> f64>(problem: &Problem<'_, F>, residual_norm: f64, evaluations: usize) -> CurveFit {
    let p = problem.params.as_slice();
    let j = problem.jacobian_at(p);
    let covariance = (j.transpose() * &j).try_inverse();
    CurveFit { params: p.to_vec(), covariance, chi2: residual_norm * residual_norm, residual_norm, evaluations }
}

/// Weighted linear least squares `y ≈ X·β`. Returns `β` and `(XᵀWX)⁻¹`.
pub fn weighted_linear(design: &DMatrix<f64>, y: &[f64], sigma: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let w = DVector::from_iterator(sigma.len(), sigma.iter().map(|s| 1.0 / (s * s)));
    let xtw = design.transpose() * DMatrix::from_diagonal(&w);
    let normal = &xtw * design;
    let cov = normal
        .try_inverse()
        .ok_or_else(|| Error::DegenerateData("design matrix is rank deficient".into()))?;
    let beta = &cov * (xtw * DVector::from_column_slice(y));
    Ok((beta, cov))
}
