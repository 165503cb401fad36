//! Radix-2 complex FFT and its multi-dimensional driver.
//!
//! Transforms are unnormalized: `forward` uses `e^{-2πi jk/n}`, `inverse` the
//! conjugate kernel. Scaling is left to the caller.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct Fft1d {
    n: usize,
    twiddles: Vec<C64>,
    bitrev: Vec<u32>,
}

impl Fft1d {
    /// Panics unless `n` is a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two");
        let twiddles = (0..n / 2)
            .map(|j| {
                let t = -2.0 * PI * j as f64 / n as f64;
                C64::new(libm::cos(t), libm::sin(t))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) }).collect();
        Fft1d { n, twiddles, bitrev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, buf: &mut [C64]) {
        self.run(buf, false);
    }

    pub fn inverse(&self, buf: &mut [C64]) {
        self.run(buf, true);
    }

    fn run(&self, buf: &mut [C64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let step = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                let (lo, hi) = buf[start..start + 2 * half].split_at_mut(half);
                for j in 0..half {
                    let mut w = self.twiddles[j * step];
                    if inverse {
                        w = w.conj();
                    }
                    let t = hi[j] * w;
                    hi[j] = lo[j] - t;
                    lo[j] += t;
                }
            }
            half *= 2;
        }
    }
}

/// Separable transform over an n-dimensional row-major array.
#[derive(Clone, Debug)]
pub struct FftNd {
    shape: Vec<usize>,
    plans: Vec<Fft1d>,
}

const BATCH: usize = 8;

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let plans = shape.iter().map(|&n| Fft1d::new(n)).collect();
        FftNd { shape: shape.to_vec(), plans }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Transform along every axis.
    pub fn forward(&self, data: &mut [C64]) {
        for axis in 0..self.shape.len() {
            self.axis(data, axis, false);
        }
    }

    pub fn inverse(&self, data: &mut [C64]) {
        for axis in 0..self.shape.len() {
            self.axis(data, axis, true);
        }
    }

    /// Transform along one axis only.
    pub fn axis(&self, data: &mut [C64], axis: usize, inverse: bool) {
        assert_eq!(data.len(), self.len());
        let n = self.shape[axis];
        let stride: usize = self.shape[axis + 1..].iter().product();
        let outer: usize = self.shape[..axis].iter().product();
        let plan = &self.plans[axis];
        if n == 1 {
            return;
        }
        if stride == 1 {
            for line in data.chunks_exact_mut(n) {
                plan.run(line, inverse);
            }
            return;
        }
        let mut buf = vec![C64::new(0.0, 0.0); BATCH * n];
        for o in 0..outer {
            let base = o * n * stride;
            let mut i0 = 0;
            while i0 < stride {
                let b = BATCH.min(stride - i0);
                for k in 0..n {
                    let row = base + k * stride + i0;
                    for t in 0..b {
                        buf[t * n + k] = data[row + t];
                    }
                }
                for t in 0..b {
                    plan.run(&mut buf[t * n..(t + 1) * n], inverse);
                }
                for k in 0..n {
                    let row = base + k * stride + i0;
                    for t in 0..b {
                        data[row + t] = buf[t * n + k];
                    }
                }
                i0 += b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[C64], sign: f64) -> Vec<C64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(C64::new(0.0, 0.0), |acc, (j, &v)| {
                    let t = sign * 2.0 * PI * (j * k) as f64 / n as f64;
                    acc + v * C64::new(libm::cos(t), libm::sin(t))
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[1usize, 2, 4, 8, 32] {
            let x: Vec<C64> =
                (0..n).map(|j| C64::new(libm::sin(j as f64 * 1.3) + 0.2, libm::cos(j as f64 * 0.7))).collect();
            let mut y = x.clone();
            Fft1d::new(n).forward(&mut y);
            let z = naive_dft(&x, -1.0);
            for (a, b) in y.iter().zip(&z) {
                assert!((a - b).norm() < 1e-11 * n as f64);
            }
            let mut w = y.clone();
            Fft1d::new(n).inverse(&mut w);
            for (a, b) in w.iter().zip(&x) {
                assert!((a / n as f64 - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn strided_axis_matches_rowwise() {
        let shape = [4usize, 16, 8];
        let nd = FftNd::new(&shape);
        let len = nd.len();
        let x: Vec<C64> = (0..len).map(|j| C64::new(libm::sin(j as f64 * 0.37), libm::cos(j as f64 * 1.1))).collect();
        let mut y = x.clone();
        nd.axis(&mut y, 1, false);
        for a in 0..4 {
            for c in 0..8 {
                let line: Vec<C64> = (0..16).map(|k| x[(a * 16 + k) * 8 + c]).collect();
                let want = naive_dft(&line, -1.0);
                for k in 0..16 {
                    assert!((y[(a * 16 + k) * 8 + c] - want[k]).norm() < 1e-11);
                }
            }
        }
    }
}
