//! Repeated quantum interactions between a `d`-level system and a chain of
//! `d'`-level environments.
//!
//! The crate covers the channel side (Stinespring, Kraus, superoperator and
//! Choi forms), spectral analysis of channels (peripheral spectrum, class-C
//! membership, irreducibility via commutator kernels, invariant states), seeded
//! random sampling (Haar unitaries, induced and asymptotic induced density
//! matrix ensembles) and the three repeated-interaction schemes with their
//! Cesàro means.

pub mod channel;
pub mod dynamics;
pub mod error;
pub mod mat;
pub mod pipeline;
pub mod sampling;
pub mod selftest;
pub mod spectral;
pub mod tolerance;

pub use error::{Error, Result};
pub use tolerance::ToleranceConfig;
