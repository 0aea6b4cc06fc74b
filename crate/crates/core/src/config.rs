//! Link configuration: one TOML document with a section per module.
//!
//! Every section is optional and falls back to its defaults, but unknown keys
//! are rejected everywhere so that a misspelt physics parameter cannot be
//! silently ignored.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::SnrModelParams;
use crate::conversion::{FilterParams, QfcParams, SagnacGeometry};
use crate::detection::{DetectorKind, DetectorParams, PulseShape};
use crate::error::{check_efficiency, check_non_negative, check_positive, Error, Result};
use crate::fiber::FiberParams;
use crate::node::NodeParams;
use crate::sequencer::{build_schedule, SequenceParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMode {
    /// Write-out photons analyzed at 780 nm next to the node, on APDs.
    Local,
    /// Write-out photons converted to 1522 nm and sent through the fiber.
    Telecom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    pub mode: LinkMode,
    /// Collection and analysis efficiency of the 780-nm write-out path.
    pub local_path_eff: f64,
    /// Write-to-read delay when no fiber is in the loop, µs.
    pub local_readout_delay_us: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams { mode: LinkMode::Telecom, local_path_eff: 0.226, local_readout_delay_us: 0.7 }
    }
}

/// Detector sections accept any subset of fields; the rest come from the
/// detector type's defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "DetectorsSection")]
pub struct Detectors {
    /// Telecom write-out detectors.
    pub snspd: DetectorParams,
    /// 780-nm detectors: read-out, and write-out in local mode.
    pub apd: DetectorParams,
}

impl Default for Detectors {
    fn default() -> Self {
        Detectors { snspd: DetectorParams::snspd(), apd: DetectorParams::apd() }
    }
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct DetectorsSection {
    snspd: PartialDetector,
    apd: PartialDetector,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct PartialDetector {
    kind: Option<DetectorKind>,
    efficiency: Option<f64>,
    dark_rate_cps: Option<f64>,
    window_ns: Option<f64>,
}

impl PartialDetector {
    fn resolve(self, base: DetectorParams) -> DetectorParams {
        DetectorParams {
            kind: self.kind.unwrap_or(base.kind),
            efficiency: self.efficiency.unwrap_or(base.efficiency),
            dark_rate_cps: self.dark_rate_cps.unwrap_or(base.dark_rate_cps),
            window_ns: self.window_ns.unwrap_or(base.window_ns),
        }
    }
}

impl From<DetectorsSection> for Detectors {
    fn from(s: DetectorsSection) -> Self {
        Detectors { snspd: s.snspd.resolve(DetectorParams::snspd()), apd: s.apd.resolve(DetectorParams::apd()) }
    }
}

/// Normalized PI gains of the Sagnac lock, as fractions of the loop gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockParams {
    pub kp: f64,
    pub ki: f64,
}

impl Default for LockParams {
    fn default() -> Self {
        LockParams { kp: 0.3, ki: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutParams {
    /// Collection and analysis efficiency of the read-out path, APDs excluded.
    pub read_path_eff: f64,
}

impl Default for ReadoutParams {
    fn default() -> Self {
        ReadoutParams { read_path_eff: 0.425 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pulses {
    pub write: PulseShape,
    pub read: PulseShape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    /// Number of trials. Takes precedence over `duration_s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Simulated wall-clock duration, s.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    /// HWP angles of the z-basis fringe, degrees (behind a QWP at 45°).
    pub z_hwp_deg: Vec<f64>,
    /// Extra read-out delays of the x-basis fringe, µs. Defaults to eight
    /// steps across one Larmor period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_extra_delay_us: Option<Vec<f64>>,
    /// Storage time added to every read-out delay, µs.
    pub extra_storage_us: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            trials: Some(1_000_000),
            duration_s: None,
            z_hwp_deg: (0..8).map(|k| k as f64 * 11.25).collect(),
            x_extra_delay_us: None,
            extra_storage_us: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub seed: u64,
    pub link: LinkParams,
    pub node: NodeParams,
    pub qfc: QfcParams,
    pub filter: FilterParams,
    pub fiber: FiberParams,
    pub detectors: Detectors,
    pub sequence: SequenceParams,
    pub sagnac: SagnacGeometry,
    pub lock: LockParams,
    pub readout: ReadoutParams,
    pub pulses: Pulses,
    pub snr_model: SnrModelParams,
    pub run: RunParams,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            seed: 1,
            link: LinkParams::default(),
            node: NodeParams::default(),
            qfc: QfcParams::default(),
            filter: FilterParams::default(),
            fiber: FiberParams::default(),
            detectors: Detectors::default(),
            sequence: SequenceParams::default(),
            sagnac: SagnacGeometry::default(),
            lock: LockParams::default(),
            readout: ReadoutParams::default(),
            pulses: Pulses::default(),
            snr_model: SnrModelParams::default(),
            run: RunParams::default(),
        }
    }
}

impl LinkConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::ConfigParse { line: 1, column: 1, message: "configuration is empty".into() });
        }
        let cfg: LinkConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
            Error::ConfigParse { line, column, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The fully resolved configuration, loadable by [`LinkConfig::from_toml_str`].
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        check_efficiency("link", "local_path_eff", self.link.local_path_eff)?;
        check_non_negative("link", "local_readout_delay_us", self.link.local_readout_delay_us)?;
        self.node.validate("node")?;
        self.qfc.validate("qfc")?;
        self.filter.validate("filter")?;
        self.fiber.validate("fiber")?;
        for (name, d) in [("snspd", &self.detectors.snspd), ("apd", &self.detectors.apd)] {
            d.validate(&format!("detectors.{name}"))?;
        }
        self.sequence.validate("sequence")?;
        self.sagnac.validate("sagnac")?;
        check_non_negative("lock", "kp", self.lock.kp)?;
        check_non_negative("lock", "ki", self.lock.ki)?;
        check_efficiency("readout", "read_path_eff", self.readout.read_path_eff)?;
        self.pulses.write.validate("pulses.write", self.herald_detector().window_ns)?;
        self.pulses.read.validate("pulses.read", self.detectors.apd.window_ns)?;
        self.snr_model.validate("snr_model")?;
        self.validate_run()?;
        build_schedule(self)?;
        Ok(())
    }

    fn validate_run(&self) -> Result<()> {
        if self.run.trials == Some(0) {
            return Err(Error::invalid("run.trials", "must be positive"));
        }
        if let Some(d) = self.run.duration_s {
            check_positive("run", "duration_s", d)?;
        }
        check_non_negative("run", "extra_storage_us", self.run.extra_storage_us)?;
        if self.run.trials.is_none() && self.run.duration_s.is_none() {
            return Err(Error::invalid("run", "one of `trials` or `duration_s` is required"));
        }
        let x_count = self.x_extra_delays_us().len();
        if self.run.z_hwp_deg.is_empty() && x_count == 0 {
            return Err(Error::invalid("run.z_hwp_deg", "no analyzer settings in either basis"));
        }
        for (i, v) in self.run.z_hwp_deg.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!("run.z_hwp_deg[{i}]"), "must be finite"));
            }
        }
        for (i, v) in self.x_extra_delays_us().iter().enumerate() {
            if !(*v >= 0.0) {
                return Err(Error::invalid(format!("run.x_extra_delay_us[{i}]"), "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Detector used for the write-out photon in the configured mode.
    pub fn herald_detector(&self) -> &DetectorParams {
        match self.link.mode {
            LinkMode::Local => &self.detectors.apd,
            LinkMode::Telecom => &self.detectors.snspd,
        }
    }

    /// Write-to-herald delay, which is also the base read-out delay, µs.
    pub fn herald_delay_us(&self) -> f64 {
        match self.link.mode {
            LinkMode::Local => self.link.local_readout_delay_us,
            LinkMode::Telecom => self.fiber.delay_us(),
        }
    }

    pub fn x_extra_delays_us(&self) -> Vec<f64> {
        match &self.run.x_extra_delay_us {
            Some(v) => v.clone(),
            None => {
                let period = self.node.larmor_period_us();
                (0..8).map(|k| k as f64 * period / 8.0).collect()
            }
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
