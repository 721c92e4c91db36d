//! Complex polynomial and rational-function arithmetic: root finding with
//! multiplicity clustering, partial fraction decomposition, and calculus on
//! sums of terms `c * t^p * e^{mu t}`.

mod expsum;
mod partial_fractions;
mod poly;
mod roots;

pub use expsum::{ExpSum, ExpTerm, DEFAULT_RESONANCE_TOL};
pub use partial_fractions::{partial_fractions, PartialFractions, PoleExpansion};
pub use poly::Poly;
pub use roots::{RootSet, DEFAULT_CLUSTER_TOL};
