//! Graphical representation models for asset returns.
//!
//! The crate estimates sparse precision matrices from return panels, turns
//! them into the endogenous representation `Y = AY + E`, and provides the
//! factor, spatial and mixed baselines, out-of-sample scoring, beta
//! analytics, partial-correlation graphs and synthetic markets with known
//! ground truth.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beta;
pub mod covariance;
pub mod error;
pub mod evaluation;
pub mod factor;
pub mod graph;
pub mod grm;
pub mod interaction;
pub mod linalg;
pub mod panel;
pub mod precision;
pub mod synth;

pub use error::{Error, Result};
