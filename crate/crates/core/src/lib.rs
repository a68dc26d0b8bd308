//! Frequency superresolution of two incoherent Gaussian lines by Hermite-Gauss mode
//! filtering with channel crosstalk.
//!
//! - [`model`]: the two-line scene and the ideal and perturbed projection probabilities
//! - [`information`]: Fisher information, Cramér–Rao bounds, superresolution parameter
//! - [`estimators`]: raw, closed-form and grid maximum-likelihood estimators
//! - [`statistics`]: sampling, exact and simulated error statistics, PER
//! - [`calibration`]: least-squares crosstalk fit
//! - [`pulse`]: HG waveforms and LTI predistortion
//! - [`runner`]: table-producing experiment drivers behind the `superres` binary
//!
//! Runnable walk-throughs of each capability live in `examples/`.

pub mod calibration;
pub mod error;
pub mod estimators;
pub mod information;
pub mod model;
pub mod pulse;
pub mod quadrature;
pub mod runner;
pub mod special;
pub mod statistics;

pub use error::{Error, Result};
