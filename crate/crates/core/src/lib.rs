//! Numerical companion for pointwise double recurrence with nilsequence
//! weights.
//!
//! The crate provides explicit torus systems ([`systems`]), nilsequence
//! generators ([`nilseq`]), weighted ergodic averages ([`averages`]),
//! finite-scale seminorm estimators ([`seminorms`]), invariant conditional
//! expectations for double averages ([`joinings`]) and a config-driven
//! experiment runner ([`harness`]).

pub mod dd;
pub mod error;
pub mod sum;
pub mod systems;
pub mod nilseq;
pub mod fourier;
pub mod averages;
pub mod seminorms;
pub mod joinings;
pub mod harness;

pub use error::{Error, Result};
pub use num_complex::Complex64;
