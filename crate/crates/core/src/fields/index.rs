//! Flat component indices for the tensors used throughout.
//!
//! Every layout is row-major in the order the indices are written.

/// `a_ij^{αβ}`.
#[inline]
pub fn t4(n: usize, i: usize, j: usize, a: usize, b: usize) -> usize {
    ((i * n + j) * n + a) * n + b
}

/// Component `γ` of the corrector with direction `k` and unit vector `β`: `χ_k^{γβ}`.
#[inline]
pub fn chi(n: usize, k: usize, b: usize, g: usize) -> usize {
    (k * n + b) * n + g
}

/// Pressure `π_k^β`.
#[inline]
pub fn pi(n: usize, k: usize, b: usize) -> usize {
    k * n + b
}

/// Flux potential `E_{kij}^{αβ}`.
#[inline]
pub fn e5(n: usize, k: usize, i: usize, j: usize, a: usize, b: usize) -> usize {
    (((k * n + i) * n + j) * n + a) * n + b
}

/// Pressure potential `q_{ij}^β`.
#[inline]
pub fn q3(n: usize, i: usize, j: usize, b: usize) -> usize {
    (i * n + j) * n + b
}
