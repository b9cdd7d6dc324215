//! Multi-state transition models for discrete-time delinquency panels.
//!
//! Each permissible edge of the state space gets its own binary logit whose
//! predictor combines a penalised additive structured part with an optional
//! neural network term kept orthogonal to it. Edge-wise probabilities are
//! mapped to one-step transition matrices and compounded into multi-step
//! state distributions.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod fit;
pub mod frame;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub mod panel;
pub mod rng;
pub mod sim;
pub mod transitions;

pub use error::{Error, Result};
