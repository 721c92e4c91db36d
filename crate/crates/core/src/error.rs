use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::PeakonState;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial of degree zero has no roots")]
    NoRoots,

    #[error("numerator and denominator share a root near {root}")]
    PoleZeroOverlap { root: Complex64 },

    #[error("exponential sum is not real-valued: term with rate {rate} has no conjugate partner")]
    NotRealValued { rate: Complex64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid spectral data: {0}")]
    InvalidSpectrum(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure {
        t: f64,
        reason: String,
        /// Last state that satisfied all invariants.
        last_good: Box<PeakonState>,
    },

    #[error("m2 vanishes at t = {t}; the algebraic reconstruction is singular there")]
    MassTwoVanishes { t: f64 },

    #[error("middle position unresolved at t = {t}: the outer peakons are too far apart for double precision")]
    SeparationLimit { t: f64 },

    #[error("t = {t} lies outside the validity window ({lo}, {hi})")]
    OutsideWindow { t: f64, lo: f64, hi: f64 },

    #[error("extrapolation did not converge: {0}")]
    ExtrapolationFailure(String),

    #[error("signature entries must be +1 or -1")]
    InvalidSignature,

    #[error("invalid portrait grid: {0}")]
    InvalidGrid(String),

    #[error("no asymptotically free regime in the requested direction: {0}")]
    WrongDirection(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
