//! Discrete exterior calculus on simplicial domains with obstacles.
//!
//! Builds relative Hodge Laplacians for a twisted (piecewise constant)
//! material, evolves Maxwell fields spectrally, computes cohomology and
//! zero modes, constructs the Gupta-Bleuler Krein data and the
//! renormalised stress-energy of the vacuum state.

pub mod config;
pub mod error;
pub mod forms;
pub mod hodge;
pub mod linalg;
pub mod maxwell;
pub mod mesh;
pub mod pipeline;
pub mod profile;
pub mod qft;
pub mod spectral;
pub mod stress;
pub mod topology;

pub use error::{Error, Result};
