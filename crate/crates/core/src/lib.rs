#![no_std]
//! Numerical core: finite operator pairs, spectral projection differences,
//! smoothed scattering matrices, Hankel discretizations and Z-operators.

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod linalg;
pub mod models;
pub mod projections;
pub mod scattering;
pub mod hankel;
pub mod zop;
pub mod quadrature;

pub use error::{Error, Result};
