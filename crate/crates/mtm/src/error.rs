//! Crate error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A weight function produced NaN or positive infinity. Log-weights must
    /// be finite or negative infinity (a zero weight).
    #[error("weight '{label}' evaluated to {value}; log-weights must be finite or -inf")]
    InvalidWeight { label: String, value: f64 },

    /// An acceptance factor left the unit interval by more than the floating
    /// point tolerance, which means the supplied lambda is not admissible.
    #[error("acceptance factor {value} is not a probability; check the lambda choice")]
    InvalidBeta { value: f64 },

    /// A finite-state kernel enumeration was requested beyond the supported
    /// size budget.
    #[error("kernel enumeration over {states} states and {tries} tries exceeds the supported budget (8 states, 3 tries)")]
    EnumerationBudget { states: usize, tries: usize },
}
