//! Finite element solvers for the Cahn-Larché system on the unit square.
//!
//! Unknowns are the phase field `phi`, chemical potential `mu` and displacement
//! `u`, discretized with bilinear elements on a structured mesh and advanced in
//! time with implicit, semi-implicit or homogeneous Euler schemes.

pub mod acceleration;
pub mod analysis;
pub mod error;
pub mod grid_fem;
pub mod materials;
pub mod schemes;
pub mod solvers;

pub use error::{Error, Result};
