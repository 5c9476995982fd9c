//! Offensive line valuation: differential statistics, salary pricing,
//! archetype clustering and tail-probability salary anomaly detection.

pub mod clustering;
pub mod dataset;
pub mod error;
pub mod pricing;
pub mod profiling;
pub mod rng;
pub mod salary_dist;
pub mod synthgen;
pub mod pipeline;
pub mod valuation;
mod stats;

pub use error::{Error, Result};
