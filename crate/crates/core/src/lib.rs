//! Belief roadmap planning with uncertain landmark evanescence.
//!
//! The robot plans over a roadmap while a map of identifiable landmarks may
//! have gone stale: each landmark is present or absent according to a joint
//! distribution over presence configurations. Beliefs over the robot pose are
//! Gaussian mixtures, one component per consistent set of landmark presence
//! assignments, propagated under the maximum-likelihood observation
//! assumption.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! harness and the command line live in the `brule` crate.

#![no_std]

extern crate alloc;

pub mod environment;
pub mod error;
pub mod evanescence;
pub mod gaussian;
pub mod mixture;
pub mod planner;
pub mod roadmap;
pub mod robot;
pub mod sampling;

pub use error::{Error, Result};
