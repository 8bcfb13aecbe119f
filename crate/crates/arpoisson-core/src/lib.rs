//! Chart-level constructions of local Poisson and symplectic groupoids for
//! almost regular Poisson structures, with numerical verifiers for the
//! identities they satisfy.
//!
//! The crate is `no_std` and needs only `alloc`; transcendental functions
//! come from `libm`.

#![no_std]

extern crate alloc;

pub mod cosymplectic;
pub mod desing;
pub mod eform;
pub mod error;
pub mod flows;
pub mod groupoid;
pub mod jet;
pub mod linalg;
pub mod ode;
pub mod probes;
pub mod realization;
pub mod tensor;
pub mod tolerances;

pub use error::{Error, Result};
pub use jet::Jet;
