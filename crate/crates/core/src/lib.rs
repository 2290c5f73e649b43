//! Nonlocal mean curvature flow of periodic graphs over the torus `T^n`, `n = 1, 2`.
//!
//! The crate is `no_std` (it needs `alloc`). The default `std` feature turns on
//! rayon for the field-wide quadrature loops. Parallel and sequential builds
//! reduce partial sums in the same fixed order, so they produce bit-identical
//! results.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod besov;
pub mod error;
pub mod fft;
pub mod field;
pub mod flow;
pub mod kernel;
pub mod lattice;
pub mod quadrature;
pub mod symbol;
pub mod verify;

mod par;

pub use error::{Error, Result};
pub use field::{GridSpec, PeriodicField, SpectralField};
pub use kernel::{CurvatureForm, CurvatureResult, FlowParams, QuadratureScheme};

pub use num_complex::Complex64;
