//! Experimental duty cycle and the trial-level event simulation.
//!
//! Each atom load is a cooling stage followed by an experimental phase of
//! `rounds` identical rounds. A round repeats a cycle of pump, write, wait for
//! the herald, detection window and (when heralded) read.

mod export;
mod session;

pub use export::{fit_basis, fringe_dataset, fringe_fit, fringe_from_trials, write_events_csv, write_trials_csv, SessionSummary, SCHEMA_VERSION};
pub use session::{derive_seed, run_session, run_sharded, trial_rng, SessionOutput, TrialRecord, TrialSpan};

use serde::{Deserialize, Serialize};

use crate::config::LinkConfig;
use crate::error::{check_efficiency, check_positive, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceParams {
    pub cooling_ms: f64,
    /// Budget of the experimental phase, ms.
    pub experiment_phase_ms: f64,
    pub rounds: u32,
    /// Upper bound on cycles per round.
    pub max_cycles_per_round: u32,
    pub pump_us: f64,
    pub write_ns: f64,
    pub window_ns: f64,
    pub read_ns: f64,
    pub init_pump_us: f64,
    pub inter_round_us: f64,
    /// Fraction of wall-clock time the apparatus is taking data, covering
    /// interruptions that the schedule does not model.
    pub availability: f64,
}

impl Default for SequenceParams {
    fn default() -> Self {
        SequenceParams {
            cooling_ms: 28.6,
            experiment_phase_ms: 6.0,
            rounds: 4,
            max_cycles_per_round: 250,
            pump_us: 2.0,
            write_ns: 50.0,
            window_ns: 200.0,
            read_ns: 250.0,
            init_pump_us: 16.0,
            inter_round_us: 2.0,
            availability: 1.0,
        }
    }
}

impl SequenceParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(prefix, "cooling_ms", self.cooling_ms)?;
        check_positive(prefix, "experiment_phase_ms", self.experiment_phase_ms)?;
        check_positive(prefix, "rounds", f64::from(self.rounds))?;
        check_positive(prefix, "max_cycles_per_round", f64::from(self.max_cycles_per_round))?;
        check_positive(prefix, "pump_us", self.pump_us)?;
        check_positive(prefix, "write_ns", self.write_ns)?;
        check_positive(prefix, "window_ns", self.window_ns)?;
        check_positive(prefix, "read_ns", self.read_ns)?;
        crate::error::check_non_negative(prefix, "init_pump_us", self.init_pump_us)?;
        crate::error::check_non_negative(prefix, "inter_round_us", self.inter_round_us)?;
        check_efficiency(prefix, "availability", self.availability)?;
        Ok(())
    }
}

/// Timing of one atom load, all in µs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    /// Write-to-herald delay.
    pub herald_delay_us: f64,
    /// Idle time between the end of the write pulse and the window opening.
    pub wait_us: f64,
    pub cycle_us: f64,
    pub rounds: u32,
    pub cycles_per_round: u32,
    pub cycles_per_load: u64,
    /// Time actually used by the experimental phase, inter-round gaps included.
    pub phase_us: f64,
    /// Cooling + initial pumping + experimental phase.
    pub load_period_us: f64,
    pub cooling_us: f64,
    pub init_pump_us: f64,
    pub inter_round_us: f64,
    pub pump_us: f64,
    /// Compensation period and dead time, µs.
    pub compensation_period_us: f64,
    pub compensation_dead_us: f64,
    pub availability: f64,
}

/// Cycle time and cycles per round for a configuration.
///
/// The wait places the end of the detection window at the herald delay, and
/// the read slot is always reserved. Cycles per round are the phase budget
/// divided by the cycle time, rounded up, then capped: the rounding up
/// reproduces the 15-cycle rounds at 20 km.
pub fn build_schedule(cfg: &LinkConfig) -> Result<Schedule> {
    let s = &cfg.sequence;
    let herald_delay_us = cfg.herald_delay_us();
    let write_us = s.write_ns * 1e-3;
    let window_us = s.window_ns * 1e-3;
    let wait_us = (herald_delay_us - write_us - window_us).max(0.0);
    let cycle_us = s.pump_us + write_us + wait_us + window_us + s.read_ns * 1e-3;
    let round_budget_us = s.experiment_phase_ms * 1e3 / f64::from(s.rounds);
    if cycle_us > round_budget_us {
        return Err(Error::InfeasibleSchedule(format!(
            "a {cycle_us:.2}-µs cycle does not fit in a {round_budget_us:.2}-µs round"
        )));
    }
    let cycles_per_round = ((round_budget_us / cycle_us).ceil() as u32).clamp(1, s.max_cycles_per_round);
    let cycles_per_load = u64::from(cycles_per_round) * u64::from(s.rounds);
    let phase_us = cycles_per_load as f64 * cycle_us + f64::from(s.rounds - 1) * s.inter_round_us;
    let cooling_us = s.cooling_ms * 1e3;
    Ok(Schedule {
        herald_delay_us,
        wait_us,
        cycle_us,
        rounds: s.rounds,
        cycles_per_round,
        cycles_per_load,
        phase_us,
        load_period_us: cooling_us + s.init_pump_us + phase_us,
        cooling_us,
        init_pump_us: s.init_pump_us,
        inter_round_us: s.inter_round_us,
        pump_us: s.pump_us,
        compensation_period_us: cfg.fiber.compensation_period_s * 1e6,
        compensation_dead_us: cfg.fiber.compensation_dead_s * 1e6,
        availability: s.availability,
    })
}

impl Schedule {
    /// Fraction of wall-clock time outside compensation dead time.
    pub fn compensation_duty(&self) -> f64 {
        1.0 - self.compensation_dead_us / self.compensation_period_us
    }

    /// Trials per second of scheduled time, compensation included, kHz.
    pub fn repetition_rate_khz(&self) -> f64 {
        self.cycles_per_load as f64 / self.load_period_us * 1e3 * self.compensation_duty()
    }

    /// Trials per second of laboratory time, availability included, kHz.
    pub fn effective_rate_khz(&self) -> f64 {
        self.repetition_rate_khz() * self.availability
    }

    /// Offset of the write pulse from the start of the experimental phase.
    pub fn phase_offset_us(&self, trial_id: u64) -> f64 {
        let within = trial_id % self.cycles_per_load;
        let round = within / u64::from(self.cycles_per_round);
        let cycle = within % u64::from(self.cycles_per_round);
        round as f64 * (f64::from(self.cycles_per_round) * self.cycle_us + self.inter_round_us)
            + cycle as f64 * self.cycle_us
            + self.pump_us
    }

    /// Wall-clock time of the write pulse of `trial_id`, µs. Compensation
    /// pauses the schedule for the dead time after every
    /// `period − dead` of running time.
    pub fn write_time_us(&self, trial_id: u64) -> f64 {
        let load = trial_id / self.cycles_per_load;
        let active =
            load as f64 * self.load_period_us + self.cooling_us + self.init_pump_us + self.phase_offset_us(trial_id);
        let running = self.compensation_period_us - self.compensation_dead_us;
        active + (active / running).floor() * self.compensation_dead_us
    }

    /// Number of trials that fit in `duration_s` of laboratory time.
    pub fn trials_in(&self, duration_s: f64) -> u64 {
        (duration_s * self.effective_rate_khz() * 1e3).floor() as u64
    }
}

/// Trials per second, kHz, for a configuration.
pub fn repetition_rate(cfg: &LinkConfig) -> Result<f64> {
    Ok(build_schedule(cfg)?.repetition_rate_khz())
}

/// Closed-form probability that a trial is heralded.
pub fn herald_probability(cfg: &LinkConfig) -> Result<f64> {
    Ok(crate::model::LinkModel::new(cfg)?.herald_probability())
}
