//! Detectors, click sampling, arrival-time histograms and SNR extraction.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{check_efficiency, check_non_negative, check_positive, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Snspd,
    Apd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub kind: DetectorKind,
    pub efficiency: f64,
    pub dark_rate_cps: f64,
    pub window_ns: f64,
}

impl DetectorParams {
    pub fn snspd() -> Self {
        DetectorParams { kind: DetectorKind::Snspd, efficiency: 0.88, dark_rate_cps: 30.0, window_ns: 200.0 }
    }

    pub fn apd() -> Self {
        DetectorParams { kind: DetectorKind::Apd, efficiency: 0.65, dark_rate_cps: 50.0, window_ns: 200.0 }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_probability_closed(prefix, "efficiency", self.efficiency)?;
        check_non_negative(prefix, "dark_rate_cps", self.dark_rate_cps)?;
        check_positive(prefix, "window_ns", self.window_ns)?;
        Ok(())
    }
}

/// Detector efficiencies may be zero (a blocked detector) but not above one.
fn check_probability_closed(prefix: &str, field: &str, v: f64) -> Result<()> {
    if v == 0.0 {
        return Ok(());
    }
    check_efficiency(prefix, field, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClickKind {
    Signal,
    /// Background photons that travel with the signal (converter noise).
    Noise,
    Dark,
}

impl ClickKind {
    pub fn label(self) -> &'static str {
        match self {
            ClickKind::Signal => "signal",
            ClickKind::Noise => "noise",
            ClickKind::Dark => "dark",
        }
    }
}

/// First click in a window, timed from the window opening.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Click {
    pub kind: ClickKind,
    pub offset_ns: f64,
}

/// Single-photon wave packet inside the detection window: a split Gaussian
/// with separate rise and fall widths, truncated at `truncation` widths on each
/// side of the peak.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseShape {
    /// Peak position measured from the window opening, ns.
    pub peak_ns: f64,
    pub rise_sigma_ns: f64,
    pub fall_sigma_ns: f64,
    pub truncation: f64,
}

impl Default for PulseShape {
    fn default() -> Self {
        PulseShape { peak_ns: 40.0, rise_sigma_ns: 5.0, fall_sigma_ns: 25.0, truncation: 3.0 }
    }
}

impl PulseShape {
    pub fn validate(&self, prefix: &str, window_ns: f64) -> Result<()> {
        check_positive(prefix, "rise_sigma_ns", self.rise_sigma_ns)?;
        check_positive(prefix, "fall_sigma_ns", self.fall_sigma_ns)?;
        check_positive(prefix, "truncation", self.truncation)?;
        let (a, b) = self.full_width_window();
        if a < 0.0 || b > window_ns {
            return Err(Error::invalid(
                crate::error::path(prefix, "peak_ns"),
                format!("pulse support [{a}, {b}] ns does not fit in the {window_ns}-ns window"),
            ));
        }
        Ok(())
    }

    /// Support of the truncated pulse, `[start, end)` in ns.
    pub fn full_width_window(&self) -> (f64, f64) {
        (self.peak_ns - self.truncation * self.rise_sigma_ns, self.peak_ns + self.truncation * self.fall_sigma_ns)
    }

    /// Half-maximum points.
    pub fn fwhm_window(&self) -> (f64, f64) {
        let k = (2.0 * std::f64::consts::LN_2).sqrt();
        (self.peak_ns - k * self.rise_sigma_ns, self.peak_ns + k * self.fall_sigma_ns)
    }

    /// Probability mass of the pulse inside `[a, b)`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.full_width_window();
        let a = a.max(lo);
        let b = b.min(hi);
        if b <= a {
            return 0.0;
        }
        self.cdf(b) - self.cdf(a)
    }

    fn cdf(&self, t: f64) -> f64 {
        let (r, f) = (self.rise_sigma_ns, self.fall_sigma_ns);
        let z = truncated_half_normal_mass(self.truncation);
        let left = r / (r + f);
        if t <= self.peak_ns {
            let x = ((self.peak_ns - t) / r).min(self.truncation);
            left * (1.0 - truncated_half_normal_mass(x) / z)
        } else {
            let x = ((t - self.peak_ns) / f).min(self.truncation);
            left + (1.0 - left) * truncated_half_normal_mass(x) / z
        }
    }

    /// Draws an arrival time by rejection from the untruncated split Gaussian.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (r, f) = (self.rise_sigma_ns, self.fall_sigma_ns);
        loop {
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
            let z = z.abs();
            if z > self.truncation {
                continue;
            }
            let left = rng.random::<f64>() < r / (r + f);
            return if left { self.peak_ns - z * r } else { self.peak_ns + z * f };
        }
    }
}

/// `P(0 ≤ Z ≤ x)` for a half-normal variable, i.e. `erf(x/√2)`.
fn truncated_half_normal_mass(x: f64) -> f64 {
    erf(x / std::f64::consts::SQRT_2)
}

/// Probability that a Poisson background of `rate_cps` fires in `window_ns`.
pub fn background_click_probability(rate_cps: f64, window_ns: f64) -> f64 {
    -(-rate_cps * window_ns * 1e-9).exp_m1()
}

/// One channel: the detector plus any background arriving with the light.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub detector: DetectorParams,
    pub noise_cps: f64,
    pub pulse: PulseShape,
}

impl Channel {
    pub fn new(detector: DetectorParams, noise_cps: f64, pulse: PulseShape) -> Self {
        Channel { detector, noise_cps, pulse }
    }

    /// Probability of at least one background (noise or dark) click in the window.
    pub fn background_probability(&self) -> f64 {
        background_click_probability(self.noise_cps + self.detector.dark_rate_cps, self.detector.window_ns)
    }

    /// Samples the first click in the window. A photon reaches the detector with
    /// probability `p_photon` and fires it with `efficiency`; noise and dark
    /// counts are independent Poisson processes. The earliest click wins.
    pub fn sample<R: Rng + ?Sized>(&self, p_photon: f64, rng: &mut R) -> Option<Click> {
        let signal = (rng.random::<f64>() < p_photon * self.detector.efficiency)
            .then(|| Click { kind: ClickKind::Signal, offset_ns: self.pulse.sample(rng) });
        let rate = self.noise_cps + self.detector.dark_rate_cps;
        let window = self.detector.window_ns;
        let background = if rate > 0.0 {
            let p = background_click_probability(rate, window);
            let u = rng.random::<f64>();
            (u < p).then(|| {
                // First arrival time; `u < p` keeps it inside the window.
                let offset_ns = (-(-u).ln_1p() / (rate * 1e-9)).min(window);
                let kind = if rng.random::<f64>() * rate < self.noise_cps { ClickKind::Noise } else { ClickKind::Dark };
                Click { kind, offset_ns }
            })
        } else {
            None
        };
        match (signal, background) {
            (Some(s), Some(b)) => Some(if b.offset_ns < s.offset_ns { b } else { s }),
            (s, b) => s.or(b),
        }
    }
}

/// Samples a click with the default pulse shape and no extra background.
pub fn sample_click<R: Rng + ?Sized>(
    p_photon: f64,
    params: &DetectorParams,
    window_ns: f64,
    rng: &mut R,
) -> Option<Click> {
    let detector = DetectorParams { window_ns, ..params.clone() };
    Channel::new(detector, 0.0, PulseShape::default()).sample(p_photon, rng)
}

/// A timestamped detector click.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub trial_id: u64,
    /// Channel label, e.g. `herald_T` or `read_up`.
    pub channel: &'static str,
    pub timestamp_ns: f64,
    /// Time since the detection window opened.
    pub offset_ns: f64,
    pub kind: ClickKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrMode {
    FullWidth,
    Fwhm,
}

/// Arrival-time histogram over one detection record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width_ns: f64,
    pub counts: Vec<u64>,
    /// Signal window for [`SnrMode::FullWidth`], `[start, end)` ns.
    pub full_width_window: (f64, f64),
    /// Signal window for [`SnrMode::Fwhm`].
    pub fwhm_window: (f64, f64),
}

impl Histogram {
    pub fn empty(record_ns: f64, bin_width_ns: f64, pulse: &PulseShape) -> Self {
        let bins = (record_ns / bin_width_ns).ceil() as usize;
        Histogram {
            bin_width_ns,
            counts: vec![0; bins],
            full_width_window: pulse.full_width_window(),
            fwhm_window: pulse.fwhm_window(),
        }
    }

    pub fn record_ns(&self) -> f64 {
        self.counts.len() as f64 * self.bin_width_ns
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, offset_ns: f64) {
        if offset_ns < 0.0 {
            return;
        }
        let bin = (offset_ns / self.bin_width_ns).floor() as usize;
        if let Some(c) = self.counts.get_mut(bin) {
            *c += 1;
        }
    }

    /// Adds the counts of another histogram with the same layout.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.counts.len() != other.counts.len() || self.bin_width_ns != other.bin_width_ns {
            return Err(Error::InvalidState("histogram layouts differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn window(&self, mode: SnrMode) -> (f64, f64) {
        match mode {
            SnrMode::FullWidth => self.full_width_window,
            SnrMode::Fwhm => self.fwhm_window,
        }
    }

    fn bin_centre(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width_ns
    }

    fn in_window(&self, i: usize, w: (f64, f64)) -> bool {
        let c = self.bin_centre(i);
        c >= w.0 && c < w.1
    }

    /// Writes `bin_start_ns,count` rows after `#` comment lines carrying the
    /// window annotations.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# bin_width_ns={}", self.bin_width_ns)?;
        writeln!(out, "# full_width_window_ns={},{}", self.full_width_window.0, self.full_width_window.1)?;
        writeln!(out, "# fwhm_window_ns={},{}", self.fwhm_window.0, self.fwhm_window.1)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_start_ns", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            w.write_record([format!("{}", i as f64 * self.bin_width_ns), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Bins event offsets into a histogram spanning `record_ns`.
pub fn build_histogram(offsets_ns: &[f64], bin_width_ns: f64, record_ns: f64, pulse: &PulseShape) -> Histogram {
    let mut h = Histogram::empty(record_ns, bin_width_ns, pulse);
    for &t in offsets_ns {
        h.add(t);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SnrEstimate {
    /// `(signal-window rate − background rate)/background rate`, per bin.
    pub snr: f64,
    pub window_bins: usize,
    pub background_bins: usize,
    /// Background-subtracted counts inside the signal window.
    pub signal_counts: f64,
    pub background_per_bin: f64,
}

/// SNR of a histogram. The background is every bin outside the full-width
/// signal window, whatever `mode` selects for the signal.
pub fn snr_from_histogram(h: &Histogram, mode: SnrMode) -> SnrEstimate {
    let signal_window = h.window(mode);
    let (mut s_sum, mut s_bins, mut b_sum, mut b_bins) = (0u64, 0usize, 0u64, 0usize);
    for (i, &c) in h.counts.iter().enumerate() {
        if h.in_window(i, signal_window) {
            s_sum += c;
            s_bins += 1;
        } else if !h.in_window(i, h.full_width_window) {
            b_sum += c;
            b_bins += 1;
        }
    }
    let background_per_bin = if b_bins > 0 { b_sum as f64 / b_bins as f64 } else { 0.0 };
    let signal_per_bin = if s_bins > 0 { s_sum as f64 / s_bins as f64 } else { 0.0 };
    let snr = if background_per_bin > 0.0 {
        (signal_per_bin - background_per_bin) / background_per_bin
    } else {
        f64::INFINITY
    };
    SnrEstimate {
        snr,
        window_bins: s_bins,
        background_bins: b_bins,
        signal_counts: s_sum as f64 - background_per_bin * s_bins as f64,
        background_per_bin,
    }
}
