//! Small dense kernels and matrix-free Krylov solvers.

pub mod dense;
pub mod krylov;
