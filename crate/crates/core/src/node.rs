//! The atomic-ensemble memory node.
//!
//! The spin-wave register is reduced to one memory qubit `{|⇓⟩, |⇑⟩}` entangled
//! with the polarization of the write-out photon. Imperfections enter as:
//!
//! * a white-noise admixture `w = c·p_exc` from multiple excitations;
//! * a retrieval-efficiency envelope `η(t)` (Gaussian or exponential);
//! * Larmor precession at `Δm = 2` in the guiding field;
//! * exponential dephasing of the atomic coherence (`coherence_tau_us`) plus
//!   shot-to-shot Gaussian phase jitter whose width grows linearly with delay;
//! * a rotation-angle error on the π/2 Raman transfer used for x-basis readout.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_efficiency, check_non_negative, check_positive, check_probability, Error, Result};
use crate::state::{validate_qubit, Matrix2c, TwoQubitState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayShape {
    Gaussian,
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn label(self) -> &'static str {
        match self {
            Basis::Z => "z",
            Basis::X => "x",
        }
    }
}

/// Readout result in the atomic eigenbasis after any basis transfer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomOutcome {
    /// `|⇓⟩_z`, read out as a σ− photon.
    Down,
    /// `|⇑⟩_z`, read out as a σ+ photon.
    Up,
}

impl AtomOutcome {
    pub const BOTH: [AtomOutcome; 2] = [AtomOutcome::Down, AtomOutcome::Up];

    pub fn index(self) -> usize {
        match self {
            AtomOutcome::Down => 0,
            AtomOutcome::Up => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AtomOutcome::Down => "down",
            AtomOutcome::Up => "up",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeParams {
    /// Excitation probability per write pulse at the source.
    pub p_exc: f64,
    /// `c` in the multi-excitation weight `w = c·p_exc`.
    pub multi_excitation_factor: f64,
    /// Internal retrieval efficiency at zero delay.
    pub eta0: f64,
    /// 1/e point of the retrieval-efficiency envelope, µs.
    pub tau_mem_us: f64,
    pub decay_shape: DecayShape,
    /// Relative amplitude of a sinusoidal ripple on the retrieval envelope.
    pub efficiency_ripple: f64,
    pub efficiency_ripple_period_us: f64,
    /// Guiding field, mG.
    pub b_guide_mg: f64,
    /// Zeeman precession rate per unit field for Δm = 1, MHz/G.
    pub gf_rate_mhz_per_g: f64,
    /// Rotation-angle error of the π/2 Raman transfer, rad.
    pub raman_error: f64,
    /// Std-dev of the Larmor phase jitter at `jitter_ref_us`, rad.
    pub phase_jitter_sigma: f64,
    pub jitter_ref_us: f64,
    /// Relative retrieval weight of `|⇓⟩`.
    pub eta_down: f64,
    /// Relative retrieval weight of `|⇑⟩`.
    pub eta_up: f64,
    /// 1/e time of the exponential atomic dephasing, µs (`inf` disables it).
    pub coherence_tau_us: f64,
    pub pump_init_eff: f64,
    /// Read-out SNR per unit retrieval efficiency.
    pub readout_snr_factor: f64,
    /// Fractional drop of `eta0` across one experimental phase (optical-depth
    /// loss). Zero disables it.
    pub od_decay_fraction: f64,
}

impl Default for NodeParams {
    fn default() -> Self {
        NodeParams {
            p_exc: 0.01,
            multi_excitation_factor: 2.0,
            eta0: 0.50,
            tau_mem_us: 160.0,
            decay_shape: DecayShape::Gaussian,
            efficiency_ripple: 0.0,
            efficiency_ripple_period_us: 20.0,
            b_guide_mg: 127.5,
            gf_rate_mhz_per_g: 0.6996,
            raman_error: 0.0,
            phase_jitter_sigma: 0.0,
            jitter_ref_us: 100.0,
            eta_down: 1.0,
            eta_up: 1.0,
            coherence_tau_us: f64::INFINITY,
            pump_init_eff: 0.90,
            readout_snr_factor: 1500.0,
            od_decay_fraction: 0.0,
        }
    }
}

impl NodeParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_probability(prefix, "p_exc", self.p_exc)?;
        if self.p_exc > 0.5 {
            return Err(Error::invalid(crate::error::path(prefix, "p_exc"), "excitation probability must be ≪ 1"));
        }
        check_non_negative(prefix, "multi_excitation_factor", self.multi_excitation_factor)?;
        if self.multi_excitation_factor * self.p_exc > 1.0 {
            return Err(Error::invalid(
                crate::error::path(prefix, "multi_excitation_factor"),
                "multi-excitation weight c·p_exc exceeds 1",
            ));
        }
        check_efficiency(prefix, "eta0", self.eta0)?;
        check_positive(prefix, "tau_mem_us", self.tau_mem_us)?;
        check_probability(prefix, "efficiency_ripple", self.efficiency_ripple)?;
        check_positive(prefix, "efficiency_ripple_period_us", self.efficiency_ripple_period_us)?;
        check_non_negative(prefix, "b_guide_mg", self.b_guide_mg)?;
        check_non_negative(prefix, "gf_rate_mhz_per_g", self.gf_rate_mhz_per_g)?;
        if !self.raman_error.is_finite() {
            return Err(Error::invalid(crate::error::path(prefix, "raman_error"), "must be finite"));
        }
        check_non_negative(prefix, "phase_jitter_sigma", self.phase_jitter_sigma)?;
        check_positive(prefix, "jitter_ref_us", self.jitter_ref_us)?;
        check_efficiency(prefix, "eta_down", self.eta_down)?;
        check_efficiency(prefix, "eta_up", self.eta_up)?;
        check_positive(prefix, "coherence_tau_us", self.coherence_tau_us)?;
        check_efficiency(prefix, "pump_init_eff", self.pump_init_eff)?;
        check_positive(prefix, "readout_snr_factor", self.readout_snr_factor)?;
        check_probability(prefix, "od_decay_fraction", self.od_decay_fraction)?;
        Ok(())
    }

    /// White-noise weight of the prepared pair, `c·p_exc`.
    pub fn multi_excitation_weight(&self) -> f64 {
        (self.multi_excitation_factor * self.p_exc).min(1.0)
    }

    pub fn outcome_weight(&self, outcome: AtomOutcome) -> f64 {
        match outcome {
            AtomOutcome::Down => self.eta_down,
            AtomOutcome::Up => self.eta_up,
        }
    }

    /// Larmor period `1/(2·gF·B)`, µs.
    pub fn larmor_period_us(&self) -> f64 {
        1.0 / (2.0 * self.gf_rate_mhz_per_g * self.b_guide_mg * 1e-3)
    }

    /// Jitter std-dev at delay `t_us`.
    pub fn jitter_sigma_at(&self, t_us: f64) -> f64 {
        self.phase_jitter_sigma * t_us / self.jitter_ref_us
    }

    /// Ensemble-averaged coherence factor at delay `t_us`: dephasing times the
    /// mean of `e^{iδ}` over the jitter distribution.
    pub fn coherence_factor(&self, t_us: f64) -> f64 {
        let s = self.jitter_sigma_at(t_us);
        (-t_us / self.coherence_tau_us).exp() * (-0.5 * s * s).exp()
    }
}

/// `ρ = (1 − w)|Φ⟩⟨Φ| + w·I/4` with `w = c·p_exc`.
pub fn initial_state(params: &NodeParams) -> Result<TwoQubitState> {
    params.validate("node")?;
    let w = params.multi_excitation_weight();
    Ok(TwoQubitState::bell().mix(&TwoQubitState::maximally_mixed(), w))
}

/// Internal retrieval efficiency after `t_us` of storage.
pub fn retrieval_efficiency(t_us: f64, params: &NodeParams) -> Result<f64> {
    if t_us < 0.0 || t_us.is_nan() {
        return Err(Error::Negative { what: "storage time", value: t_us });
    }
    let x = t_us / params.tau_mem_us;
    let envelope = match params.decay_shape {
        DecayShape::Gaussian => (-x * x).exp(),
        DecayShape::Exponential => (-x).exp(),
    };
    let ripple = 1.0 + params.efficiency_ripple * (2.0 * PI * t_us / params.efficiency_ripple_period_us).sin();
    Ok((params.eta0 * envelope * ripple).clamp(0.0, 1.0))
}

/// Relative phase of `|⇑⟩` (m = +1) against `|⇓⟩` (m = −1) after `t_us`.
pub fn larmor_phase(t_us: f64, params: &NodeParams) -> f64 {
    2.0 * PI * 2.0 * params.gf_rate_mhz_per_g * (params.b_guide_mg * 1e-3) * t_us
}

/// `diag(1, e^{iφ})` on the atomic qubit.
pub fn phase_rotation(phi: f64) -> Matrix2c {
    Matrix2c::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, phi),
    )
}

/// Rotation about the atomic y axis, `exp(−iθσ_y/2)`.
pub fn y_rotation(theta: f64) -> Matrix2c {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2c::new(
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    )
}

/// The Raman transfer: a rotation by `−(π/2 + error)` about y. With zero error
/// it takes `(|⇓⟩+|⇑⟩)/√2 → |⇓⟩` and `(|⇓⟩−|⇑⟩)/√2 → |⇑⟩` (up to phase).
pub fn raman_unitary(error: f64) -> Matrix2c {
    y_rotation(-(FRAC_PI_2 + error))
}

/// Deterministic storage channel on the pair: Larmor rotation, exponential
/// dephasing and the ensemble average of the phase jitter.
pub fn apply_memory_channel(rho: &TwoQubitState, t_us: f64, params: &NodeParams) -> Result<TwoQubitState> {
    rho.validate()?;
    if t_us < 0.0 {
        return Err(Error::Negative { what: "storage time", value: t_us });
    }
    Ok(rho
        .apply_atom(&phase_rotation(larmor_phase(t_us, params)))
        .dephase_atom(params.coherence_factor(t_us)))
}

/// One shot of the storage channel: the jitter is drawn rather than averaged.
pub fn sample_memory_channel<R: Rng + ?Sized>(
    rho: &TwoQubitState,
    t_us: f64,
    params: &NodeParams,
    rng: &mut R,
) -> Result<TwoQubitState> {
    rho.validate()?;
    if t_us < 0.0 {
        return Err(Error::Negative { what: "storage time", value: t_us });
    }
    let jitter = sample_jitter(t_us, params, rng);
    Ok(rho
        .apply_atom(&phase_rotation(larmor_phase(t_us, params) + jitter))
        .dephase_atom((-t_us / params.coherence_tau_us).exp()))
}

/// Draws the Larmor phase jitter for a storage time of `t_us`.
pub fn sample_jitter<R: Rng + ?Sized>(t_us: f64, params: &NodeParams, rng: &mut R) -> f64 {
    let s = params.jitter_sigma_at(t_us);
    if s > 0.0 {
        Normal::new(0.0, s).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

pub fn raman_transfer(rho: &TwoQubitState, error: f64) -> TwoQubitState {
    rho.apply_atom(&raman_unitary(error))
}

/// Single-qubit version of the storage channel, used after the photon has been
/// measured. `jitter` is an extra phase (zero for the averaged channel).
pub fn evolve_atom(rho: &Matrix2c, t_us: f64, params: &NodeParams, jitter: Option<f64>) -> Matrix2c {
    let (phase, factor) = match jitter {
        Some(d) => (larmor_phase(t_us, params) + d, (-t_us / params.coherence_tau_us).exp()),
        None => (larmor_phase(t_us, params), params.coherence_factor(t_us)),
    };
    let u = phase_rotation(phase);
    let mut out = u * rho * u.adjoint();
    out[(0, 1)] *= factor;
    out[(1, 0)] *= factor;
    out
}

/// Populations `(P(⇓), P(⇑))` seen by the readout in `basis`.
pub fn readout_populations(rho_atom: &Matrix2c, basis: Basis, params: &NodeParams) -> [f64; 2] {
    let rho = match basis {
        Basis::Z => *rho_atom,
        Basis::X => {
            let u = raman_unitary(params.raman_error);
            u * rho_atom * u.adjoint()
        }
    };
    let tr = (rho[(0, 0)] + rho[(1, 1)]).re;
    if tr <= 0.0 {
        return [0.5, 0.5];
    }
    [rho[(0, 0)].re / tr, rho[(1, 1)].re / tr]
}

/// Atomic qubit conditioned on the write-out detection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionedAtom {
    pub rho: Matrix2c,
    pub heralded: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadoutSample {
    pub outcome: AtomOutcome,
    pub retrieved: bool,
    /// A background click inside the read-out signal window.
    pub readout_noise_click: bool,
}

/// Samples one read-out attempt `delay_us` after the write pulse.
///
/// The storage channel (with sampled jitter) is applied, the Raman transfer is
/// applied for the x basis, the outcome is drawn from the Born probabilities and
/// retrieval succeeds with `η(delay)·weight(outcome)`. A background click
/// occurs with probability `1/readout_snr_factor`, which fixes the read-out SNR
/// at `readout_snr_factor·η`.
pub fn readout_sample<R: Rng + ?Sized>(
    atom: &ConditionedAtom,
    basis: Basis,
    delay_us: f64,
    params: &NodeParams,
    rng: &mut R,
) -> Result<ReadoutSample> {
    if !atom.heralded {
        return Err(Error::NotHeralded);
    }
    validate_qubit(&atom.rho)?;
    let eta = retrieval_efficiency(delay_us, params)?;
    let jitter = sample_jitter(delay_us, params, rng);
    let evolved = evolve_atom(&atom.rho, delay_us, params, Some(jitter));
    let [p_down, _] = readout_populations(&evolved, basis, params);
    let outcome = if rng.random::<f64>() < p_down { AtomOutcome::Down } else { AtomOutcome::Up };
    let retrieved = rng.random::<f64>() < eta * params.outcome_weight(outcome);
    let readout_noise_click = rng.random::<f64>() < (1.0 / params.readout_snr_factor).min(1.0);
    Ok(ReadoutSample { outcome, retrieved, readout_noise_click })
}
