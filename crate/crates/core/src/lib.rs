//! Effective Hamiltonians for multiphoton transitions of a multilevel atom
//! driven by classical lasers and coupled to one quantized cavity mode.
//!
//! The crate assembles the full interaction-picture Hamiltonian of the
//! ladder, eliminates the far-detuned intermediate levels with a
//! Heisenberg-picture recurrence (and, for comparison, with second- and
//! third-order time-averaging formulas), and checks every effective model
//! against brute-force propagation of the full system.

pub mod complex_serde;
pub mod config;
pub mod dynamics;
pub mod elimination;
pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod model;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
