//! Finite approximations of completely random measures.
//!
//! Rate measures and approximate indicators live in [`measures`]; atom-size
//! laws and samplers in [`approximations`]; exact predictive processes in
//! [`marginals`]; total-variation tooling and bound evaluators in
//! [`analysis`]; Gibbs sampling for the linear-Gaussian feature model in
//! [`inference`].
#![no_std]

extern crate alloc;

pub mod analysis;
pub mod approximations;
pub mod error;
pub mod inference;
pub mod marginals;
pub mod measures;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

#[cfg(test)]
extern crate std;
