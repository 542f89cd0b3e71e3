//! Non-interacting one- and two-particle quantum walks on disordered
//! tight-binding lattices.
//!
//! A [`lattice::LatticeSpec`] and a seed give a Hamiltonian; the
//! [`propagator`] diagonalizes it once and evaluates `U(t)` at any time;
//! [`correlations`] turns pairs of propagator columns into two-particle
//! correlation matrices; [`ensemble`] averages over disorder realizations and
//! [`analysis`] reduces the averages to scalar metrics. [`oracle`] is a
//! brute-force Fock-space solver used to check the closed forms.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod correlations;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod oracle;
pub mod output;
pub mod propagator;
pub mod special;

pub use error::{Error, Result};
