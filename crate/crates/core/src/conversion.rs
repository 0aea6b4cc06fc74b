//! Polarization-independent frequency conversion and the filter stack.
//!
//! The converter is a DFG stage inside a Sagnac loop: each input polarization
//! is converted in its own pass through the crystal, so the two arms carry
//! independent efficiencies and a relative phase `Δφ` that must be locked.
//! That phase is sensed with leaked pump light and fed back onto one mirror.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_efficiency, check_non_negative, check_positive, path, Error, Result};
use crate::polarization::{JonesVector, Matrix, PolarizationUnitary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Arm {
    H,
    V,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QfcParams {
    /// Peak end-to-end efficiency of the H arm, filter module included.
    pub eta_max_h: f64,
    pub eta_max_v: f64,
    /// Pump power at which the DFG curve peaks, W.
    pub p_peak_w: f64,
    /// Operating pump power, W.
    pub pump_power_w: f64,
    pub crystal_length_mm: f64,
    /// Converter noise per output channel before fiber loss, CPS.
    pub noise_rate_cps: f64,
    pub internal_eff: f64,
    pub coupling_eff: f64,
    pub optics_eff: f64,
}

impl Default for QfcParams {
    fn default() -> Self {
        QfcParams {
            eta_max_h: 0.472,
            eta_max_v: 0.485,
            p_peak_w: 1.749,
            pump_power_w: 1.749,
            crystal_length_mm: 50.0,
            noise_rate_cps: 250.0,
            internal_eff: 0.945,
            coupling_eff: 0.892,
            optics_eff: 0.862,
        }
    }
}

impl QfcParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_efficiency(prefix, "eta_max_h", self.eta_max_h)?;
        check_efficiency(prefix, "eta_max_v", self.eta_max_v)?;
        check_positive(prefix, "p_peak_w", self.p_peak_w)?;
        check_non_negative(prefix, "pump_power_w", self.pump_power_w)?;
        check_positive(prefix, "crystal_length_mm", self.crystal_length_mm)?;
        check_non_negative(prefix, "noise_rate_cps", self.noise_rate_cps)?;
        check_efficiency(prefix, "internal_eff", self.internal_eff)?;
        check_efficiency(prefix, "coupling_eff", self.coupling_eff)?;
        check_efficiency(prefix, "optics_eff", self.optics_eff)?;
        Ok(())
    }

    /// Normalized coupling `α` fixed by the peak condition `α·P_peak·Lc² = (π/2)²`,
    /// in W⁻¹·mm⁻².
    pub fn alpha_nor(&self) -> f64 {
        FRAC_PI_2 * FRAC_PI_2 / (self.p_peak_w * self.crystal_length_mm * self.crystal_length_mm)
    }

    pub fn eta_max(&self, arm: Arm) -> f64 {
        match arm {
            Arm::H => self.eta_max_h,
            Arm::V => self.eta_max_v,
        }
    }
}

/// `η(P) = η_max·sin²(√(α·P)·Lc)`.
pub fn dfg_efficiency(pump_w: f64, arm: Arm, params: &QfcParams) -> Result<f64> {
    if pump_w < 0.0 || pump_w.is_nan() {
        return Err(Error::Negative { what: "pump power", value: pump_w });
    }
    let x = (params.alpha_nor() * pump_w).sqrt() * params.crystal_length_mm;
    Ok(params.eta_max(arm) * x.sin().powi(2))
}

/// One named stage of a loss chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub name: &'static str,
    pub efficiency: f64,
}

/// Product of stage efficiencies.
pub fn chain_efficiency(stages: &[Stage]) -> f64 {
    stages.iter().map(|s| s.efficiency).product()
}

/// Loss stages of the converter itself (filtering excluded).
pub fn converter_stages(params: &QfcParams) -> Vec<Stage> {
    vec![
        Stage { name: "fiber coupling", efficiency: params.coupling_eff },
        Stage { name: "optical elements", efficiency: params.optics_eff },
        Stage { name: "internal conversion", efficiency: params.internal_eff },
    ]
}

/// External quantum efficiency of the converter. The stage values are quoted
/// for the V arm; the H arm is scaled by `eta_max_h/eta_max_v`.
pub fn converter_eqe(params: &QfcParams, arm: Arm) -> f64 {
    let v = chain_efficiency(&converter_stages(params));
    match arm {
        Arm::V => v,
        Arm::H => v * params.eta_max_h / params.eta_max_v,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    pub flange_fpc_eff: f64,
    pub etalon_eff: f64,
    pub vbg_eff: f64,
    /// Second band-pass filter plus single-mode fiber coupling.
    pub bpf_coupling_eff: f64,
    /// Motor-HWP, PBS and Faraday rotator of the analysis module.
    pub analysis_eff: f64,
    pub etalon_fwhm_mhz: f64,
    pub etalon_fsr_ghz: f64,
    pub vbg_fwhm_ghz: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            flange_fpc_eff: 0.915,
            etalon_eff: 0.749,
            vbg_eff: 0.977,
            bpf_coupling_eff: 0.826,
            analysis_eff: 0.93,
            etalon_fwhm_mhz: 27.0,
            etalon_fsr_ghz: 15.0,
            vbg_fwhm_ghz: 25.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_efficiency(prefix, "flange_fpc_eff", self.flange_fpc_eff)?;
        check_efficiency(prefix, "etalon_eff", self.etalon_eff)?;
        check_efficiency(prefix, "vbg_eff", self.vbg_eff)?;
        check_efficiency(prefix, "bpf_coupling_eff", self.bpf_coupling_eff)?;
        check_efficiency(prefix, "analysis_eff", self.analysis_eff)?;
        check_positive(prefix, "etalon_fwhm_mhz", self.etalon_fwhm_mhz)?;
        check_positive(prefix, "etalon_fsr_ghz", self.etalon_fsr_ghz)?;
        check_positive(prefix, "vbg_fwhm_ghz", self.vbg_fwhm_ghz)?;
        Ok(())
    }

    pub fn stages(&self) -> Vec<Stage> {
        vec![
            Stage { name: "flange and polarization controller", efficiency: self.flange_fpc_eff },
            Stage { name: "etalon", efficiency: self.etalon_eff },
            Stage { name: "volume Bragg grating", efficiency: self.vbg_eff },
        ]
    }
}

/// Transmission of the narrowband filter module.
pub fn filter_transmission(params: &FilterParams) -> f64 {
    chain_efficiency(&params.stages())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseComponent {
    pub source: &'static str,
    pub cps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseBudget {
    pub total_cps: f64,
    pub components: Vec<NoiseComponent>,
}

/// Per-channel background at the detector: converter noise after `transmittance`
/// of fiber plus detector dark counts.
pub fn noise_budget(converter_cps: f64, dark_cps: f64, transmittance: f64) -> NoiseBudget {
    let components = vec![
        NoiseComponent { source: "converter", cps: converter_cps * transmittance },
        NoiseComponent { source: "detector dark counts", cps: dark_cps },
    ];
    NoiseBudget { total_cps: components.iter().map(|c| c.cps).sum(), components }
}

/// Path lengths and wavevectors of the Sagnac converter. Lengths in m,
/// wavevectors in rad/m, dispersion phases in rad.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SagnacGeometry {
    pub l1_m: f64,
    pub l2_m: f64,
    pub s1_m: f64,
    pub s2_m: f64,
    pub k_s: f64,
    pub k_c: f64,
    pub k_p: f64,
    pub disp_h: f64,
    pub disp_v: f64,
    pub disp_m2: f64,
    pub disp_m3: f64,
    /// Pump power leaked through each cavity mirror into the lock detector, W.
    pub pump_leak_w: f64,
}

pub const SIGNAL_WAVELENGTH_M: f64 = 780.24e-9;
pub const CONVERTED_WAVELENGTH_M: f64 = 1522.0e-9;

impl Default for SagnacGeometry {
    fn default() -> Self {
        let k_s = 2.0 * PI / SIGNAL_WAVELENGTH_M;
        let k_c = 2.0 * PI / CONVERTED_WAVELENGTH_M;
        SagnacGeometry {
            l1_m: 0.120,
            l2_m: 0.135,
            s1_m: 0.080,
            s2_m: 0.080,
            k_s,
            k_c,
            k_p: k_s - k_c,
            disp_h: 0.0,
            disp_v: 0.0,
            disp_m2: 0.0,
            disp_m3: 0.0,
            pump_leak_w: 1e-3,
        }
        .locked()
    }
}

impl SagnacGeometry {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(prefix, "k_s", self.k_s)?;
        check_positive(prefix, "k_c", self.k_c)?;
        check_positive(prefix, "k_p", self.k_p)?;
        let expect = self.k_s - self.k_c;
        if ((self.k_p - expect) / expect).abs() > 1e-6 {
            return Err(Error::invalid(path(prefix, "k_p"), format!("must equal k_s − k_c = {expect}")));
        }
        check_non_negative(prefix, "pump_leak_w", self.pump_leak_w)?;
        Ok(())
    }

    /// Moves `s2_m` by less than one pump half-wavelength so that `Δφ_p = 0 (mod 2π)`.
    pub fn locked(mut self) -> Self {
        let phase = pump_phase_difference(&self);
        let wrapped = phase - 2.0 * PI * (phase / (2.0 * PI)).round();
        self.s2_m -= wrapped / (2.0 * self.k_p);
        self
    }

    /// Derivative of `Δφ_p` with respect to `S2`.
    pub fn phase_per_metre(&self) -> f64 {
        2.0 * self.k_p
    }
}

/// Phases `(φ_conH, φ_conV)` of the two converted beams at the output:
///
/// ```text
/// φ_conH = k_s·L2 − k_p·S1 + k_c·L1 + φ_dispH
/// φ_conV = k_s·L1 − k_p·(S1 + 2·S2) + k_c·L2 + φ_dispV
/// ```
pub fn converted_output_phases(g: &SagnacGeometry) -> (f64, f64) {
    let h = g.k_s.mul_add(g.l2_m, g.k_c.mul_add(g.l1_m, (-g.k_p).mul_add(g.s1_m, g.disp_h)));
    let v = g.k_s.mul_add(g.l1_m, g.k_c.mul_add(g.l2_m, (-g.k_p).mul_add(g.s1_m + 2.0 * g.s2_m, g.disp_v)));
    (h, v)
}

/// `φ_conH − φ_conV = k_p(2S2 + L2 − L1) + (φ_dispH − φ_dispV)`.
///
/// Subtracting the two output phases, the `S1` terms cancel and the signal and
/// converted wavevectors combine to `k_s − k_c = k_p`.
pub fn conversion_phase_difference(g: &SagnacGeometry) -> f64 {
    g.k_p * (2.0 * g.s2_m + g.l2_m - g.l1_m) + (g.disp_h - g.disp_v)
}

/// `Δφ_p = φ_M3 − φ_M2 = k_p(2S2 + L2 − L1) + (φ_dispM3 − φ_dispM2)`.
pub fn pump_phase_difference(g: &SagnacGeometry) -> f64 {
    g.k_p * (2.0 * g.s2_m + g.l2_m - g.l1_m) + (g.disp_m3 - g.disp_m2)
}

/// Balanced-detector output `2·P_pump·sin Δφ_p`, W.
pub fn lock_error_signal(g: &SagnacGeometry) -> f64 {
    2.0 * g.pump_leak_w * pump_phase_difference(g).sin()
}

/// PI gains acting on the error signal, m/W.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockGains {
    pub kp: f64,
    pub ki: f64,
}

impl LockGains {
    /// Gains expressed as fractions of the small-signal loop gain, so that
    /// `kp_norm = 1` would cancel an offset in one step.
    pub fn normalized(g: &SagnacGeometry, kp_norm: f64, ki_norm: f64) -> Self {
        let slope = 2.0 * g.pump_leak_w * g.phase_per_metre();
        LockGains { kp: kp_norm / slope, ki: ki_norm / slope }
    }
}

impl Default for LockGains {
    fn default() -> Self {
        LockGains::normalized(&SagnacGeometry::default(), 0.3, 0.2)
    }
}

/// PZT offset and accumulated error of the path-length lock.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LockState {
    pub pzt_length_m: f64,
    pub integrator: f64,
}

/// One sample of the lock loop.
///
/// `geometry` is the unlocked loop and `drift_m` the accumulated disturbance
/// on `S2`. The error is measured on `S2 + drift + pzt`, and the new PZT
/// setting is `−(kp·e + ki·Σe)`, which pushes `Δφ_p` toward zero. Returns the
/// new state and the error that was measured.
pub fn lock_loop_step(
    state: LockState,
    geometry: &SagnacGeometry,
    gains: LockGains,
    drift_m: f64,
) -> Result<(LockState, f64)> {
    if gains.kp < 0.0 || gains.ki < 0.0 {
        return Err(Error::invalid("sagnac.gains", "gains must be non-negative"));
    }
    let error = lock_error_signal(&effective_geometry(geometry, state, drift_m));
    let integrator = state.integrator + error;
    let pzt_length_m = -(gains.kp * error + gains.ki * integrator);
    Ok((LockState { pzt_length_m, integrator }, error))
}

/// The loop seen by the light: `S2` moved by drift and by the PZT.
pub fn effective_geometry(geometry: &SagnacGeometry, state: LockState, drift_m: f64) -> SagnacGeometry {
    SagnacGeometry { s2_m: geometry.s2_m + drift_m + state.pzt_length_m, ..geometry.clone() }
}

/// Jones operator of the converter in the circular frame: `diag(√η_H·e^{iΔφ}, √η_V)`
/// in the `{H, V}` frame. Not unitary: its singular values are the arm amplitudes.
pub fn conversion_operator(eta_h: f64, eta_v: f64, delta_phi: f64) -> Matrix {
    let m = Matrix::new(
        Complex64::from_polar(eta_h.sqrt(), delta_phi),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(eta_v.sqrt(), 0.0),
    );
    let t = crate::polarization::hv_to_lr();
    t * m * t.adjoint()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvertedPhoton {
    pub survived: bool,
    pub pol_out: JonesVector,
}

/// Converts one photon at pump power `pump_w` with the loop phase `delta_phi`.
pub fn convert_photon<R: Rng + ?Sized>(
    pol: &JonesVector,
    pump_w: f64,
    delta_phi: f64,
    params: &QfcParams,
    rng: &mut R,
) -> Result<ConvertedPhoton> {
    if !pol.is_normalized() {
        return Err(Error::InvalidState(format!("input polarization has norm² {}", pol.norm_sqr())));
    }
    let eta_h = dfg_efficiency(pump_w, Arm::H, params)?;
    let eta_v = dfg_efficiency(pump_w, Arm::V, params)?;
    let out = JonesVector::from_vector(conversion_operator(eta_h, eta_v, delta_phi) * pol.as_vector());
    let p = out.norm_sqr();
    let survived = rng.random::<f64>() < p;
    let pol_out = if p > 0.0 { out.normalized() } else { *pol };
    Ok(ConvertedPhoton { survived, pol_out })
}

/// The unitary part of the converter for equal arms.
pub fn phase_unitary(delta_phi: f64) -> PolarizationUnitary {
    PolarizationUnitary(conversion_operator(1.0, 1.0, delta_phi))
}
