//! Fits, estimators and error bars.

pub mod decay;
pub mod dfg;
pub mod fidelity;
pub mod fringe;
pub mod lm;
pub mod snr;

pub use decay::{fit_decay, DecayFit, ShapeFit};
pub use dfg::{fit_efficiency_curve, EfficiencyCurveFit};
pub use fidelity::{fidelity_from_visibilities, fidelity_with_error, FidelityEstimate};
pub use fringe::{fit_fringe, FringeDataset, PeriodMode, VisibilityEstimate};
pub use snr::{fit_snr_model, snr_model, solve_r_exc, SnrFit, SnrModelParams};
