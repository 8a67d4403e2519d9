//! Numerical laboratory for a mesoscopic Ising mean-field game.
//!
//! The model couples a spin field `s(tau, z)` on the unit torus with a
//! costate `p(tau, z)` through a forward-backward optimality system. The
//! crate solves that system, evaluates and cross-checks the cost
//! functional against its double-well decomposition, computes the
//! boundary-layer and traveling-wave cell problems behind the macroscopic
//! (sharp-interface) cost, and maps the phase transition at
//! `beta * j_hat = 1`.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod fft;
pub mod fields;
pub mod grid;
pub mod kernel;
pub mod potential;
pub mod profiles;
pub mod solver;

pub use error::{Error, Result};
