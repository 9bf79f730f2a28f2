//! Experiment harness for the `mtm` sampling kernels.
//!
//! The library side hosts the pieces the `mtm` binary is built from:
//! config parsing, experiment execution, built-in table presets, CSV
//! rendering and chain dumps. Keeping them in a library makes every stage
//! testable without spawning the binary.

pub mod config;
pub mod csvout;
pub mod dump;
pub mod error;
pub mod experiment;
pub mod tables;

pub use error::{HarnessError, Result};
