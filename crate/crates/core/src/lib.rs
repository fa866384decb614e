//! Fourier-spectral solver for forward-backward mean field games on the torus
//! with nonlocal nonseparable Hamiltonians and pseudomeasure initial data.
//!
//! The system is posed in mild form for `v = ∇u` and the density `m`, solved by
//! Picard iteration on truncated Fourier coefficients, and accompanied by a
//! verifier that evaluates the smallness conditions guaranteeing a contraction.

pub mod cli;
pub mod config;
pub mod duhamel;
pub mod error;
pub mod fieldio;
pub mod hamiltonian;
pub mod measures;
pub mod payoff;
pub mod random;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
