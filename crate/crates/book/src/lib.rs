//! The chapters of `book/src` as modules, so `cargo test --doc` runs every
//! listing of the guide against the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/polarization.md")]
pub mod polarization {}
#[doc = include_str!("../../../book/src/ensemble.md")]
pub mod ensemble {}
#[doc = include_str!("../../../book/src/conversion.md")]
pub mod conversion {}
#[doc = include_str!("../../../book/src/fiber.md")]
pub mod fiber {}
#[doc = include_str!("../../../book/src/detection.md")]
pub mod detection {}
#[doc = include_str!("../../../book/src/sequencer.md")]
pub mod sequencer {}
#[doc = include_str!("../../../book/src/analysis.md")]
pub mod analysis {}
#[doc = include_str!("../../../book/src/calibration.md")]
pub mod calibration {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
