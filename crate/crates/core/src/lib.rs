//! Simulation and analysis toolkit for a cold-atomic-ensemble quantum-network link.

// `!(x > 0.0)` checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibration;
pub mod config;
pub mod conversion;
pub mod detection;
pub mod error;
pub mod fiber;
pub mod io;
pub mod model;
pub mod node;
pub mod polarization;
pub mod sequencer;
pub mod state;

pub use error::{Error, Result};
