//! Explicit hard instances for learning halfspaces under Massart noise.
//!
//! The crate builds a pair of one-dimensional piecewise-Gaussian measures
//! whose low-order moments match the standard normal, plants them along a
//! hidden direction to obtain a Massart-noise distribution, lifts the
//! resulting polynomial threshold function to a halfspace, and runs a
//! simulated statistical-query laboratory against it.
//!
//! Modules:
//!
//! * [`onedim`]: the measures `A`, `B` and interval systems `J1`, `J2`.
//! * [`moments`]: exact and numerical moments, chi-square, explicit bounds.
//! * [`planner`]: asymptotic parameter schedule, desk configs, Tsybakov maps.
//! * [`instance`]: the labelled distribution, flip probabilities, OPT.
//! * [`lift`]: Veronese embedding and halfspace weights.
//! * [`sq_lab`]: SQ oracle, near-orthogonal directions, learners, experiments.
//! * [`verify`]: the end-to-end verification suite.

// `!(x < y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod gaussian;
pub mod instance;
pub mod lift;
pub mod moments;
pub mod numeric;
pub mod onedim;
pub mod planner;
pub mod quadrature;
pub mod sq_lab;
pub mod verify;

pub use error::{Error, Result};
