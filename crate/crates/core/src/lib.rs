//! Surfel-based elevation state-space for planning over uneven terrain.
//!
//! Raw point clouds are summarized into surfels carrying a traversability
//! cost, lifted along their normals into an elevation volume, and searched
//! with RRT* and PRM* using a cost-biased sampler and a surface-cost objective.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cloud;
pub mod error;
pub mod planner;
pub mod spatial;
pub mod state_space;
pub mod surfel;

#[cfg(test)]
mod fixtures;

pub use error::{Error, Result};
