//! City-scale visibility graph analysis.
//!
//! The pipeline rasterises a study area into a regular grid, computes
//! point-to-point visibility with an octant sweep, stores the graph as a
//! delta-varint compressed CSR, and estimates depth-based space-syntax
//! metrics with HyperLogLog-driven HyperBall iterations. An exact BFS
//! oracle is available for validation.

pub mod cgraph;
pub mod components;
pub mod error;
pub mod geometry;
pub mod hll;
pub mod hyperball;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod sparksieve;
pub mod synth;

pub use error::{Result, VgaError};
