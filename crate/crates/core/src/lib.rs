//! Spectral Galerkin simulation of the stochastically forced 2D
//! Navier-Stokes equations on the torus, with noise-assumption checks,
//! nudged coupling experiments and ergodic diagnostics.

pub mod cli;
pub mod config;
pub mod coupling;
pub mod ergodic;
pub mod error;
pub mod lattice;
pub mod noise;
pub mod nonlin;
pub mod sde;
pub mod snapshot;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
