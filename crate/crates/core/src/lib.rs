//! Decoherence of a qubit coupled to a disordered Harper-Hofstadter photonic
//! lattice.
//!
//! - [`lattice`]: bath operator, flux phases, disorder fields.
//! - [`spectral`]: strip dispersion, gaps and edge branches.
//! - [`dynamics`]: RK4 evolution of the single-excitation amplitudes.
//! - [`nonmarkov`]: reduced qubit state and the quantifier `N_T`.
//! - [`ensemble`]: seeded disorder ensembles and sweeps.
//! - [`config`], [`manifest`], [`cli`]: run plumbing.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod manifest;
pub mod nonmarkov;
pub mod spectral;

pub use error::{Error, Result};
