//! Bernoulli–Exponential first passage percolation on finite strongly
//! connected digraphs.
//!
//! The crate provides the generalized Bernoulli–Exponential sampler and its
//! Dirichlet small-scale counterpart, environments on graphs, first passage
//! solvers, the finite-ε time-reversal coupling built from the stationary
//! distribution of a Dirichlet environment, and the statistical tests used to
//! check every distributional identity of the model.

pub mod environment;
pub mod fpp;
pub mod graph;
pub mod reversal;
pub mod samplers;
pub mod scalar;
pub mod stats;
pub mod suites;

pub use graph::{EdgeId, Path, VertexId, WeightedDigraph};
pub use scalar::Scalar;

pub type Digraph = WeightedDigraph<f64>;
pub type Digraph32 = WeightedDigraph<f32>;
