//! Policy-gradient exploration workbench.
//!
//! Shaped learning objectives (return plus entropy bonuses), REINFORCE
//! estimators, and measurements of how exploration changes both the objective
//! landscape and the distribution of stochastic ascent directions.

pub mod analysis;
pub mod env;
pub mod learn;
pub mod error;
pub mod experiment;
pub mod mdp;
mod num;
pub mod policy;
pub mod rng;
pub mod shaping;

pub use error::{Error, Result};
