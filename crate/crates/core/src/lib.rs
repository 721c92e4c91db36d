//! Peakon dynamics for the Degasperis-Procesi equation.
//!
//! The crate integrates the n-peakon ordinary differential equations of the
//! b-family, extracts the non-selfadjoint spectral data of a configuration,
//! evolves three-peakon solutions in closed form through the spectral
//! residues, detects peakon-antipeakon collisions together with the shock
//! data they create, and classifies three-peakon initial data by the sign
//! pattern of the masses.

pub mod classify;
pub mod closedform;
pub mod dynamics;
pub mod error;
pub mod events;
pub mod polycalc;
pub mod sampling;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use spectral::PeakonState;
