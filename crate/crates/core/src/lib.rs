//! Measurement-analysis toolkit for low-frequency stability margins of
//! amplifiers.
//!
//! The crate reconstructs calibrated closed-loop frequency responses at
//! internal circuit nodes from network-analyzer and high-impedance-probe
//! data, fits rational pole-zero models to them, localizes the stage
//! responsible for a critical resonance, and tracks pole trajectories
//! across parameter sweeps. A built-in linear-circuit simulator with
//! analytically known poles serves as the validation oracle for the
//! whole chain.
//!
//! Modules:
//! - [`netio`]: Touchstone files, response tables, pole reports.
//! - [`netalg`]: two-port algebra and symmetric-device bisection.
//! - [`deembed`]: input-block de-embedding and response composition.
//! - [`ident`]: rational fitting, residues, margin metrics.
//! - [`oracle`]: small-signal circuit simulator and measurement synthesis.
//! - [`track`]: pole matching across sweeps, bifurcation bracketing,
//!   report and SVG emission.

// validation comparisons written as `!(x > 0.0)` deliberately treat NaN
// as invalid too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deembed;
mod error;
pub mod ident;
pub mod netalg;
pub mod netio;
pub mod oracle;
pub mod track;

pub use error::{Error, Result};
pub use num_complex::Complex64;
