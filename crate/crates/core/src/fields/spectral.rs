//! Normalized discrete Fourier transform on periodic grids.
//!
//! Coefficients are `c_k = N⁻¹ Σ_j f_j e^{-2πi k·x_j}` so that a constant
//! field maps to its value in the zero mode and the discrete `L²` norm of the
//! unit cell equals the `ℓ²` norm of the coefficients.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::fft::FftNd;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Transform plan plus per-mode wave-vector tables for one array shape.
#[derive(Clone, Debug)]
pub struct Spectral {
    shape: Vec<usize>,
    len: usize,
    fft: FftNd,
    /// Signed integer wave numbers per mode and axis; the Nyquist entry is `N/2`.
    waves: Vec<i32>,
    /// Flat index of the mode `-k`.
    neg: Vec<u32>,
    /// `2π·k` per mode and axis with Nyquist entries zeroed (differentiation symbol).
    dk: Vec<f64>,
    /// Mode has a Nyquist component on some axis.
    nyquist: Vec<bool>,
}

impl Spectral {
    pub fn new(shape: &[usize]) -> Self {
        let dim = shape.len();
        let len: usize = shape.iter().product();
        let mut waves = vec![0i32; len * dim];
        let mut neg = vec![0u32; len];
        let mut nyquist = vec![false; len];
        let mut idx = vec![0usize; dim];
        for m in 0..len {
            let mut f = m;
            for d in (0..dim).rev() {
                idx[d] = f % shape[d];
                f /= shape[d];
            }
            let mut nflat = 0usize;
            for d in 0..dim {
                let n = shape[d];
                let k = idx[d];
                let w = if 2 * k < n {
                    k as i32
                } else if 2 * k == n {
                    nyquist[m] = true;
                    (n / 2) as i32
                } else {
                    k as i32 - n as i32
                };
                waves[m * dim + d] = w;
                nflat = nflat * n + (n - k) % n;
            }
            neg[m] = nflat as u32;
        }
        let dk = waves
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let n = shape[i % dim];
                if 2 * w.unsigned_abs() as usize == n {
                    0.0
                } else {
                    2.0 * PI * w as f64
                }
            })
            .collect();
        Spectral { shape: shape.to_vec(), len, fft: FftNd::new(shape), waves, neg, dk, nyquist }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn fft(&self) -> &FftNd {
        &self.fft
    }

    /// Integer wave number of `mode` along `axis` (Nyquist reported as `+N/2`).
    #[inline]
    pub fn wave(&self, mode: usize, axis: usize) -> i32 {
        self.waves[mode * self.shape.len() + axis]
    }

    /// Wave number used by spectral differentiation: Nyquist entries are zeroed.
    #[inline]
    pub fn deriv_wave(&self, mode: usize, axis: usize) -> f64 {
        self.dk[mode * self.shape.len() + axis] / (2.0 * PI)
    }

    /// `2π` times [`Self::deriv_wave`].
    #[inline]
    pub fn dk(&self, mode: usize, axis: usize) -> f64 {
        self.dk[mode * self.shape.len() + axis]
    }

    /// `|2πk|²` over the selected axes range.
    #[inline]
    pub fn dk_norm_sqr(&self, mode: usize, axes: core::ops::Range<usize>) -> f64 {
        axes.map(|a| self.dk(mode, a) * self.dk(mode, a)).sum()
    }

    #[inline]
    pub fn has_nyquist(&self, mode: usize) -> bool {
        self.nyquist[mode]
    }

    /// Mode belongs to the truncated space: nonzero and Nyquist free.
    #[inline]
    pub fn is_resolved(&self, mode: usize) -> bool {
        mode != 0 && !self.nyquist[mode]
    }

    #[inline]
    pub fn negated(&self, mode: usize) -> usize {
        self.neg[mode] as usize
    }

    pub fn forward(&self, x: &[f64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.len];
        self.forward_into(x, &mut out);
        out
    }

    pub fn forward_into(&self, x: &[f64], out: &mut [C64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = C64::new(v, 0.0);
        }
        self.fft.forward(out);
        let s = 1.0 / self.len as f64;
        out.iter_mut().for_each(|c| *c *= s);
    }

    /// Two real fields through one complex transform.
    pub fn forward_pair(&self, a: &[f64], b: &[f64], oa: &mut [C64], ob: &mut [C64]) {
        for ((o, &x), &y) in oa.iter_mut().zip(a).zip(b) {
            *o = C64::new(x, y);
        }
        self.fft.forward(oa);
        let s = 0.5 / self.len as f64;
        for m in 0..self.len {
            let zk = oa[m];
            let zn = oa[self.neg[m] as usize].conj();
            ob[m] = C64::new(zk.im - zn.im, zn.re - zk.re) * s;
        }
        // second pass: the `a` part can overwrite in place only after `b` is read
        for m in 0..self.len {
            let n = self.neg[m] as usize;
            if n < m {
                continue;
            }
            let zk = oa[m];
            let zn = oa[n];
            oa[m] = (zk + zn.conj()) * s;
            if n != m {
                oa[n] = (zn + zk.conj()) * s;
            }
        }
    }

    /// Batch forward transform of real fields.
    pub fn forward_many(&self, fields: &[&[f64]]) -> Vec<Vec<C64>> {
        let mut out: Vec<Vec<C64>> = fields.iter().map(|_| vec![ZERO; self.len]).collect();
        let mut i = 0;
        while i < fields.len() {
            if i + 1 < fields.len() {
                let (lo, hi) = out.split_at_mut(i + 1);
                self.forward_pair(fields[i], fields[i + 1], &mut lo[i], &mut hi[0]);
                i += 2;
            } else {
                self.forward_into(fields[i], &mut out[i]);
                i += 1;
            }
        }
        out
    }

    /// Real part of the inverse transform. `scratch` must have length `len`.
    pub fn inverse_into(&self, s: &[C64], out: &mut [f64], scratch: &mut [C64]) {
        scratch.copy_from_slice(s);
        self.fft.inverse(scratch);
        for (o, c) in out.iter_mut().zip(scratch.iter()) {
            *o = c.re;
        }
    }

    pub fn inverse(&self, s: &[C64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        let mut scratch = vec![ZERO; self.len];
        self.inverse_into(s, &mut out, &mut scratch);
        out
    }

    /// Inverse of two Hermitian spectra through one complex transform.
    pub fn inverse_pair(&self, sa: &[C64], sb: &[C64], oa: &mut [f64], ob: &mut [f64], scratch: &mut [C64]) {
        for ((z, &a), &b) in scratch.iter_mut().zip(sa).zip(sb) {
            *z = a + C64::new(-b.im, b.re);
        }
        self.fft.inverse(scratch);
        for ((x, y), z) in oa.iter_mut().zip(ob.iter_mut()).zip(scratch.iter()) {
            *x = z.re;
            *y = z.im;
        }
    }

    pub fn inverse_many(&self, spectra: &[&[C64]]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = spectra.iter().map(|_| vec![0.0; self.len]).collect();
        let mut scratch = vec![ZERO; self.len];
        let mut i = 0;
        while i < spectra.len() {
            if i + 1 < spectra.len() {
                let (lo, hi) = out.split_at_mut(i + 1);
                self.inverse_pair(spectra[i], spectra[i + 1], &mut lo[i], &mut hi[0], &mut scratch);
                i += 2;
            } else {
                self.inverse_into(spectra[i], &mut out[i], &mut scratch);
                i += 1;
            }
        }
        out
    }

    /// `out = ∂_axis` of the spectrum `s`.
    pub fn derivative(&self, s: &[C64], axis: usize, out: &mut [C64]) {
        for m in 0..self.len {
            out[m] = s[m] * C64::new(0.0, self.dk(m, axis));
        }
    }

    /// Spectral derivative of a real field along `axis`.
    pub fn derivative_real(&self, x: &[f64], axis: usize) -> Vec<f64> {
        let s = self.forward(x);
        let mut d = vec![ZERO; self.len];
        self.derivative(&s, axis, &mut d);
        self.inverse(&d)
    }

    /// Zero the Nyquist-bearing modes and (optionally) the mean.
    pub fn truncate(&self, s: &mut [C64], keep_mean: bool) {
        for m in 0..self.len {
            if self.nyquist[m] || (m == 0 && !keep_mean) {
                s[m] = ZERO;
            }
        }
    }

    /// `Σ |c_k|²`, the squared discrete `L²` norm on the unit cell.
    pub fn energy(s: &[C64]) -> f64 {
        s.iter().map(|c| c.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell_l2(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn constant_maps_to_zero_mode() {
        let sp = Spectral::new(&[8, 8]);
        let s = sp.forward(&[2.5; 64]);
        assert!((s[0] - C64::new(2.5, 0.0)).norm() < 1e-15);
        assert!(s[1..].iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn sine_has_two_modes() {
        let n = 16;
        let sp = Spectral::new(&[n, n]);
        let x: Vec<f64> = (0..n * n).map(|m| libm::sin(2.0 * PI * (m / n) as f64 / n as f64)).collect();
        let s = sp.forward(&x);
        for m in 0..n * n {
            let (k0, k1) = (sp.wave(m, 0), sp.wave(m, 1));
            let want = match (k0, k1) {
                (1, 0) => C64::new(0.0, -0.5),
                (-1, 0) => C64::new(0.0, 0.5),
                _ => ZERO,
            };
            assert!((s[m] - want).norm() < 1e-14, "mode ({k0},{k1})");
        }
    }

    #[test]
    fn derivative_of_sine() {
        let n = 16;
        let sp = Spectral::new(&[n, n]);
        let x: Vec<f64> = (0..n * n).map(|m| libm::sin(2.0 * PI * (m % n) as f64 / n as f64)).collect();
        let d = sp.derivative_real(&x, 1);
        for m in 0..n * n {
            let want = 2.0 * PI * libm::cos(2.0 * PI * (m % n) as f64 / n as f64);
            assert!((d[m] - want).abs() < 1e-12);
        }
    }

    fn field(len: usize, seed: u64) -> Vec<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip_and_plancherel(p in 3u32..7, seed in any::<u64>()) {
            let n = 1usize << p;
            let sp = Spectral::new(&[n, n]);
            let x = field(n * n, seed);
            let y = field(n * n, seed ^ 0xdead_beef);
            let s = sp.forward(&x);
            let back = sp.inverse(&s);
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
            let e = Spectral::energy(&s);
            prop_assert!((e - cell_l2(&x)).abs() <= 1e-12 * cell_l2(&x));
            // pair paths agree with the single-field ones
            let many = sp.forward_many(&[&x, &y]);
            let sy = sp.forward(&y);
            for m in 0..n * n {
                prop_assert!((many[0][m] - s[m]).norm() <= 1e-14 * scale * 4.0);
                prop_assert!((many[1][m] - sy[m]).norm() <= 1e-14 * scale * 4.0);
            }
            let inv = sp.inverse_many(&[&many[0], &many[1]]);
            for m in 0..n * n {
                prop_assert!((inv[0][m] - x[m]).abs() <= 1e-12 * scale);
                prop_assert!((inv[1][m] - y[m]).abs() <= 1e-12 * scale);
            }
        }
    }
}
