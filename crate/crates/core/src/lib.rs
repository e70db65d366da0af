//! Adaptive sampling of fixed-timestep dynamic simulations.
//!
//! A campaign excites a model with frequency- and amplitude-modulated
//! pseudo-random binary signals (FAPRBS) around chosen mean inputs and steers
//! new simulations toward uncovered regions of the output space:
//!
//! 1. space-filling mean inputs (cube corners, face centers, Hammersley points),
//! 2. expansion of the seed hull from pairwise midpoints,
//! 3. population of empty regions found through Voronoi vertices,
//! 4. restart from a far-away state visited by an earlier trajectory.
//!
//! The resulting [`dataset::Dataset`] feeds dynamic surrogate models; the
//! [`surrogate`] module offers a nearest-neighbor baseline to judge it.

pub mod dataset;
pub mod geometry;
pub mod models;
pub mod sampler;
pub mod signal;
pub mod surrogate;
