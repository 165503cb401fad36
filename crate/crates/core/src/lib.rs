//! Numerical kernels for two-scale homogenization of periodic Stokes systems.
//!
//! Everything here works on `alloc` only. File formats, configuration and the
//! command line live in the `rshom` companion crate.
#![no_std]

extern crate alloc;

pub mod cellsolve;
pub mod effective;
mod error;
pub mod expansion;
pub mod fft;
pub mod fields;
pub mod finesolve;
pub mod linalg;
pub mod rates;
pub mod smoothing;

pub use error::{Error, Result};
