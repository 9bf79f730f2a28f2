//! Multiple-try Metropolis sampling kernels.
//!
//! Each transition draws a pool of candidates, selects one by weight, and
//! accepts or rejects it with a probability built from one of several
//! interchangeable acceptance rules:
//!
//! * the generalized ratio rule ([`acceptance::alpha_generalized`]),
//! * factorized rules composed from a pointwise factor and a selection-weight
//!   factor ([`acceptance::BetaRule`] and [`acceptance::GammaRule`]),
//! * a variant that reuses the candidate pool instead of drawing fresh
//!   reference points ([`sampler::mtm_step_noref`]).
//!
//! The crate splits into:
//!
//! * [`state`]: points, target and proposal interfaces, candidate weights,
//!   and the seeded random stream every sampler consumes;
//! * [`acceptance`]: the acceptance rules and their building blocks;
//! * [`sampler`]: single transitions and the chain runner, plus a plain
//!   Metropolis-Hastings runner for baselines;
//! * [`models`]: built-in targets, proposals, and weight presets;
//! * [`diagnostics`]: per-chain statistics and replication aggregation;
//! * [`oracle`]: exact transition kernels for small finite-state models,
//!   used to audit detailed balance by direct enumeration;
//! * [`quad`]: one-dimensional adaptive quadrature for normalization checks;
//! * [`numeric`]: log-space helpers shared by the rules and the samplers.
//!
//! Determinism: all randomness flows through [`state::RngStream`], which is
//! keyed by a seed and a stream id. Rebuilding a stream with the same pair
//! replays the same chain.
//!
//! ```
//! use mtm::models::{BimodalQuartic, RwGauss, WeightPreset};
//! use mtm::sampler::{run_chain, SamplerConfig};
//! use mtm::acceptance::AcceptanceRule;
//! use mtm::state::{RngStream, StatePoint};
//! use mtm::diagnostics::acceptance_rate;
//! use std::sync::Arc;
//!
//! let config = SamplerConfig::homogeneous(
//!     Arc::new(RwGauss::new(2.0, 1)),
//!     5,
//!     Arc::new(WeightPreset::Importance),
//!     AcceptanceRule::Generalized,
//! );
//! let mut rng = RngStream::new(1, 0);
//! let trace = run_chain(StatePoint::scalar(0.0), &config, &BimodalQuartic, 200, &mut rng).unwrap();
//! let rate = acceptance_rate(&trace);
//! assert!(rate > 0.0 && rate < 1.0);
//! ```

pub mod acceptance;
pub mod diagnostics;
pub mod error;
pub mod models;
pub mod numeric;
pub mod oracle;
pub mod quad;
pub mod sampler;
pub mod state;

pub use error::{Error, Result};
pub use state::{Proposal, ProposalRef, RngStream, StatePoint, Target, TargetRef, WeightFunction, WeightRef};
