//! Exact-diagonalization toolkit for time-domain diagnostics of eigenstate
//! transitions.
//!
//! The crate is organised bottom-up:
//!
//! - [`models`]: dense Hamiltonians of the Aubry-Andre chain, the 3D Anderson
//!   model and the avalanche model, with seeded disorder realizations.
//! - [`spectral`]: symmetric eigendecomposition, level spacings, the typical
//!   Heisenberg time and gap ratios.
//! - [`quench`]: initial-state families and their overlap weights with the
//!   eigenbasis.
//! - [`dynamics`]: survival probability, its scaled form, and the raw spectral
//!   form factor on logarithmic time grids.
//! - [`analysis`]: power-law and fractal-dimension fits, the Heisenberg-time
//!   exponent and the gap-ratio scaling collapse.
//!
//! Everything here is pure and reentrant; ensemble farming lives in the
//! harness crate.

pub mod analysis;
pub mod dynamics;
mod error;
pub mod models;
pub mod quench;
pub mod spectral;

pub use error::{Error, Result};
