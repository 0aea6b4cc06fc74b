//! Long-fiber transmission and automated polarization compensation.
//!
//! The fiber is a unitary that random-walks on SU(2). A QWP–HWP–QWP controller
//! after the fiber is tuned by gradient descent so that two non-orthogonal
//! references, `|V⟩` and `|D⟩`, come out unchanged. Pinning two such states
//! pins the whole channel to the identity up to a global phase.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, Error, Result};
use crate::polarization::{waveplate, JonesVector, PolarizationUnitary, StokesVector, WaveplateKind};

/// Fiber lengths (km) and single-trip readout delays (µs) used to fit the
/// default delay coefficients.
pub const DELAY_CALIBRATION: [(f64, f64); 4] = [(0.01, 1.10), (5.0, 25.65), (10.0, 50.15), (20.0, 99.25)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberParams {
    pub length_km: f64,
    pub atten_db_per_km: f64,
    pub delay_us_per_km: f64,
    pub delay_offset_us: f64,
    /// Std-dev of each rotation-vector component per drift interval, rad.
    pub drift_step_sigma: f64,
    pub drift_interval_s: f64,
    pub compensation_period_s: f64,
    pub compensation_dead_s: f64,
    pub reference_toggle_hz: f64,
    pub compensation_max_iters: usize,
    pub compensation_tol: f64,
}

impl Default for FiberParams {
    fn default() -> Self {
        let (slope, offset) = fit_delay_coefficients(&DELAY_CALIBRATION).expect("distinct lengths");
        FiberParams {
            length_km: 0.0,
            atten_db_per_km: 0.2,
            delay_us_per_km: slope,
            delay_offset_us: offset,
            drift_step_sigma: 0.0,
            drift_interval_s: 1.0,
            compensation_period_s: 300.0,
            compensation_dead_s: 2.0,
            reference_toggle_hz: 10.0,
            compensation_max_iters: 2000,
            compensation_tol: 1e-4,
        }
    }
}

impl FiberParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_non_negative(prefix, "length_km", self.length_km)?;
        check_non_negative(prefix, "atten_db_per_km", self.atten_db_per_km)?;
        check_non_negative(prefix, "delay_us_per_km", self.delay_us_per_km)?;
        check_non_negative(prefix, "delay_offset_us", self.delay_offset_us)?;
        check_non_negative(prefix, "drift_step_sigma", self.drift_step_sigma)?;
        check_positive(prefix, "drift_interval_s", self.drift_interval_s)?;
        check_positive(prefix, "compensation_period_s", self.compensation_period_s)?;
        check_non_negative(prefix, "compensation_dead_s", self.compensation_dead_s)?;
        if self.compensation_dead_s >= self.compensation_period_s {
            return Err(Error::invalid(
                crate::error::path(prefix, "compensation_dead_s"),
                "dead time must be shorter than the compensation period",
            ));
        }
        check_positive(prefix, "reference_toggle_hz", self.reference_toggle_hz)?;
        check_positive(prefix, "compensation_tol", self.compensation_tol)?;
        Ok(())
    }

    pub fn transmittance(&self) -> f64 {
        transmittance(self.length_km, self.atten_db_per_km)
    }

    pub fn delay_us(&self) -> f64 {
        propagation_delay(self.length_km, self)
    }

    /// Fraction of wall-clock time not lost to compensation.
    pub fn duty_factor(&self) -> f64 {
        1.0 - self.compensation_dead_s / self.compensation_period_s
    }
}

/// `10^(−α·L/10)`.
pub fn transmittance(length_km: f64, atten_db_per_km: f64) -> f64 {
    10f64.powf(-atten_db_per_km * length_km / 10.0)
}

/// Single-trip delay from the write pulse to the herald trigger, µs.
pub fn propagation_delay(length_km: f64, params: &FiberParams) -> f64 {
    params.delay_offset_us + params.delay_us_per_km * length_km
}

/// Ordinary least-squares line through `(length_km, delay_us)` points.
/// Returns `(slope, offset)`.
pub fn fit_delay_coefficients(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::DegenerateData("need at least two delay points".into()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateData("all fiber lengths are equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompensationState {
    pub fiber_unitary: PolarizationUnitary,
    /// QWP, HWP, QWP fast-axis angles, rad, in the order the light meets them.
    pub compensator_params: [f64; 3],
    pub last_error: f64,
    pub reference_toggle_hz: f64,
}

impl CompensationState {
    pub fn new(fiber_unitary: PolarizationUnitary) -> Self {
        let compensator_params = [0.0; 3];
        let last_error = compensation_objective(&compensator_params, &fiber_unitary);
        CompensationState { fiber_unitary, compensator_params, last_error, reference_toggle_hz: 10.0 }
    }

    /// Compensator followed by nothing: the residual channel seen by photons.
    pub fn residual_channel(&self) -> PolarizationUnitary {
        compensator_unitary(&self.compensator_params) * self.fiber_unitary
    }
}

/// `QWP(a3)·HWP(a2)·QWP(a1)`. All-zero angles give the identity up to phase.
pub fn compensator_unitary(angles: &[f64; 3]) -> PolarizationUnitary {
    waveplate(WaveplateKind::Quarter, angles[2])
        * waveplate(WaveplateKind::Half, angles[1])
        * waveplate(WaveplateKind::Quarter, angles[0])
}

/// Random-walk step of the fiber birefringence.
pub fn drift_step<R: Rng + ?Sized>(state: &CompensationState, sigma: f64, rng: &mut R) -> CompensationState {
    if sigma == 0.0 {
        return state.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let omega = [normal.sample(rng), normal.sample(rng), normal.sample(rng)];
    let angle = omega.iter().map(|w| w * w).sum::<f64>().sqrt();
    let kick = PolarizationUnitary::rotation(omega, angle);
    let fiber_unitary = (kick * state.fiber_unitary).reorthonormalized();
    let last_error = compensation_objective(&state.compensator_params, &fiber_unitary);
    CompensationState { fiber_unitary, last_error, ..state.clone() }
}

fn references() -> [JonesVector; 2] {
    [JonesVector::vertical(), JonesVector::diagonal()]
}

/// `Σ_{ref ∈ {V, D}} |S(C·U·ref) − S(ref)|²`.
pub fn compensation_objective(angles: &[f64; 3], fiber: &PolarizationUnitary) -> f64 {
    let total = compensator_unitary(angles) * *fiber;
    references()
        .iter()
        .map(|r| {
            let out: StokesVector = total.apply(r).stokes();
            out.distance_sqr(&r.stokes())
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompensationOutcome {
    pub state: CompensationState,
    pub iterations: usize,
    pub converged: bool,
}

const FD_STEP: f64 = 1e-3;
const INITIAL_RATE: f64 = 0.5;
const MIN_RATE: f64 = 1e-12;

/// Gradient descent on the compensator angles.
///
/// Gradients are central differences with step `1e-3` rad. Each iteration
/// tries the current learning rate and halves it until the objective drops;
/// a successful step doubles the rate for the next iteration. If the rate
/// collapses before `tol` is reached the search restarts from a fresh angle
/// triple, which escapes the saddle points of the landscape.
pub fn compensate(state: &CompensationState, max_iters: usize, tol: f64) -> CompensationOutcome {
    let fiber = state.fiber_unitary;
    let f = |a: &[f64; 3]| compensation_objective(a, &fiber);
    let mut angles = state.compensator_params;
    let mut value = f(&angles);
    let mut rate = INITIAL_RATE;
    let mut iterations = 0;
    let mut restarts = 0u32;
    while value >= tol && iterations < max_iters {
        iterations += 1;
        let mut grad = [0.0; 3];
        for (i, g) in grad.iter_mut().enumerate() {
            let mut plus = angles;
            let mut minus = angles;
            plus[i] += FD_STEP;
            minus[i] -= FD_STEP;
            *g = (f(&plus) - f(&minus)) / (2.0 * FD_STEP);
        }
        let mut stepped = false;
        while rate > MIN_RATE {
            let trial = [angles[0] - rate * grad[0], angles[1] - rate * grad[1], angles[2] - rate * grad[2]];
            let v = f(&trial);
            if v < value {
                angles = trial;
                value = v;
                rate *= 2.0;
                stepped = true;
                break;
            }
            rate *= 0.5;
        }
        if !stepped {
            restarts += 1;
            angles = restart_point(restarts);
            value = f(&angles);
            rate = INITIAL_RATE;
        }
    }
    let converged = value < tol;
    let angles = angles.map(|a| a.rem_euclid(PI));
    CompensationOutcome {
        state: CompensationState { compensator_params: angles, last_error: value, ..state.clone() },
        iterations,
        converged,
    }
}

/// Deterministic, well-spread restart angles (additive golden-ratio sequence).
fn restart_point(k: u32) -> [f64; 3] {
    const G: [f64; 3] = [0.819_172_513_396_164_4, 0.671_043_606_703_789_2, 0.549_700_477_901_970_5];
    G.map(|g| ((f64::from(k) * g).fract()) * PI)
}
