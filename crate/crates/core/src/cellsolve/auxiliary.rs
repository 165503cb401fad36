//! `Δf + ∇q = I`, `div f = 0` on the unit torus, solved mode by mode.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::fields::{PeriodicGrid, Spectral};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct AuxiliarySolution {
    pub f: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    /// `L²` size of the Nyquist content of `I`, which no discrete gradient reaches.
    pub unresolved: f64,
}

/// Exact spectral solve for a vector datum `I^α` with zero cell average.
///
/// On a resolved mode with `k = 2πκ`: `q̂ = −i k·Î/|k|²` and
/// `f̂ = −(Î − k(k·Î)/|k|²)/|k|²`.
pub fn solve_stokes_auxiliary(grid: PeriodicGrid, data: &[Vec<f64>]) -> Result<AuxiliarySolution> {
    let n = grid.dim();
    if data.len() != n || data.iter().any(|c| c.len() != grid.len()) {
        return Err(Error::GridMismatch);
    }
    let sp = Spectral::new(&grid.shape());
    let refs: Vec<&[f64]> = data.iter().map(|c| c.as_slice()).collect();
    let spec = sp.forward_many(&refs);
    let scale = libm::sqrt(spec.iter().map(|s| Spectral::energy(s)).sum::<f64>());
    let mean = libm::sqrt(spec.iter().map(|s| s[0].norm_sqr()).sum::<f64>());
    if mean > 1e-10 * scale {
        return Err(Error::NonZeroMean { mean, scale });
    }
    let (fh, qh, unresolved) = aux_spectra(&sp, &spec, 0..n);
    let frefs: Vec<&[C64]> = fh.iter().map(|c| c.as_slice()).collect();
    Ok(AuxiliarySolution { f: sp.inverse_many(&frefs), q: sp.inverse(&qh), unresolved })
}

/// Mode-by-mode solve on spectra; derivatives act on the axes in `axes`.
pub(crate) fn aux_spectra(
    sp: &Spectral,
    spec: &[Vec<C64>],
    axes: core::ops::Range<usize>,
) -> (Vec<Vec<C64>>, Vec<C64>, f64) {
    let len = sp.len();
    let n = spec.len();
    let zero = C64::new(0.0, 0.0);
    let mut fh = vec![vec![zero; len]; n];
    let mut qh = vec![zero; len];
    let mut unresolved = 0.0;
    let off = axes.start;
    for m in 0..len {
        let k2 = sp.dk_norm_sqr(m, axes.clone());
        if k2 == 0.0 {
            unresolved += spec.iter().map(|s| s[m].norm_sqr()).sum::<f64>();
            continue;
        }
        let mut ki = zero;
        for a in 0..n {
            ki += spec[a][m] * sp.dk(m, off + a);
        }
        qh[m] = ki * C64::new(0.0, -1.0 / k2);
        for a in 0..n {
            fh[a][m] = -(spec[a][m] - ki * (sp.dk(m, off + a) / k2)) / k2;
        }
    }
    (fh, qh, libm::sqrt(unresolved))
}
