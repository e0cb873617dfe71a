//! Pseudo billiard dynamics: exact simulation and numerical analysis of
//! switched flow models in convex polytopes.
//!
//! A pseudo billiard is a particle moving with constant velocity inside a
//! convex region; at each boundary collision the velocity jumps to the
//! value of a vector field attached to the facet that was hit (there is no
//! reflection law). The crate builds the concrete model families from the
//! switched-flow literature (switched arrival systems, general 2-D polygon
//! billiards, threshold/cut perturbations, switched server systems), exposes
//! their exact first-return maps with piecewise-affine derivatives, and
//! ships the numerical machinery used to certify chaotic, neutral and
//! contracting behavior: Lyapunov spectra, vertex-line certificates, strong
//! Markov partition checks, transition graphs, periodic-attractor detection,
//! occupation histograms and coupling experiments.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod math;
pub mod model;

pub use error::{Error, Result};
