//! Desk-scale numerical laboratory for equilibration of small subsystems in
//! closed quantum systems.
//!
//! The crate builds Hamiltonians in spectral form, evolves pure states exactly
//! in the energy eigenbasis, and checks the known bounds on subsystem
//! fluctuations, effective dimensions and initial-state independence against
//! Monte Carlo estimates.

pub mod bipartite;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod limits;
pub mod linalg;
pub mod seed;
pub mod state;
pub mod verify;

pub use num_complex::Complex64;

pub use error::{Error, Result};
