//! Chaos detection by expansion entropy, and the dynamics and equilibria of
//! three particles interacting through a Lennard-Jones type potential under a
//! fixed-area constraint.

pub mod entropy;
pub mod equilibria;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod linalg;
pub mod potential;
pub mod region;
pub mod systems;

pub use error::{Error, Result};
pub use region::BoxRegion;
