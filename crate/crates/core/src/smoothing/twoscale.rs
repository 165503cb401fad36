//! Cell fields `g(y)` and `g(y, z)` evaluated at `y = x/ε`, `z = x/ε²` on the
//! macro nodes.
//!
//! When `1/ε = m` is an integer, `g(x/ε, x/ε²)` is a trigonometric polynomial
//! in `x` with frequencies `m·k + m²·l`. Folding each frequency onto the macro
//! lattice (with the node-offset phase) and running one inverse transform gives
//! the node values exactly. Otherwise every node is evaluated directly.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::fields::{Domain, PeriodicGrid, Spectral, TwoScaleGrid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalRoute {
    /// Spectral folding when `1/ε` is an integer, direct evaluation otherwise.
    Auto,
    /// Direct evaluation of the interpolant at every node.
    Pointwise,
}

/// Real trigonometric interpolant of grid data on the unit cell.
///
/// Nyquist coefficients are split evenly between `±N/2`, which makes the
/// interpolant real.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    dim: usize,
    /// Integer wave vectors, `dim` per term.
    waves: Vec<i64>,
    coeffs: Vec<C64>,
}

impl TrigInterpolant {
    /// `shape` may mix axes of different lengths; values are row-major.
    pub fn new(shape: &[usize], values: &[f64]) -> Self {
        let sp = Spectral::new(shape);
        Self::from_spectrum(&sp, &sp.forward(values))
    }

    fn from_spectrum(sp: &Spectral, s: &[C64]) -> Self {
        let dim = sp.dim();
        let shape = sp.shape().to_vec();
        let mut waves = Vec::new();
        let mut coeffs = Vec::new();
        let mut w = vec![0i64; dim];
        for (m, &c) in s.iter().enumerate() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let nyq: Vec<usize> = (0..dim).filter(|&d| 2 * sp.wave(m, d).unsigned_abs() as usize == shape[d]).collect();
            let copies = 1usize << nyq.len();
            let share = c / copies as f64;
            for mask in 0..copies {
                for d in 0..dim {
                    w[d] = sp.wave(m, d) as i64;
                }
                for (b, &d) in nyq.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        w[d] = -w[d];
                    }
                }
                waves.extend_from_slice(&w);
                coeffs.push(share);
            }
        }
        TrigInterpolant { dim, waves, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        let mut s = 0.0;
        for (t, c) in self.coeffs.iter().enumerate() {
            let w = &self.waves[t * self.dim..(t + 1) * self.dim];
            let th: f64 = 2.0 * PI * w.iter().zip(p).map(|(&k, &x)| k as f64 * x).sum::<f64>();
            s += c.re * libm::cos(th) - c.im * libm::sin(th);
        }
        s
    }
}

/// `m` with `1/ε = m`, if `1/ε` is an integer.
pub fn integer_inverse(eps: f64) -> Option<i64> {
    let m = libm::round(1.0 / eps);
    if m >= 1.0 && (1.0 / eps - m).abs() < 1e-9 * m {
        Some(m as i64)
    } else {
        None
    }
}

/// Scale factors of the evaluation: `y = x/ε` and, for two-scale fields, `z = x/ε²`.
fn fold(domain: &Domain, interp: &TrigInterpolant, scales: &[i64]) -> Vec<f64> {
    let n = domain.dim();
    let np = domain.points() as i64;
    let s = domain.offset();
    let lattice = domain.lattice();
    let sp = Spectral::new(&lattice.shape());
    let mut spec = vec![C64::new(0.0, 0.0); lattice.len()];
    let groups = interp.dim / n;
    for (t, &c) in interp.coeffs.iter().enumerate() {
        let w = &interp.waves[t * interp.dim..(t + 1) * interp.dim];
        let mut bin = 0usize;
        let mut phase = 0.0;
        for d in 0..n {
            let mut kx = 0i64;
            for g in 0..groups {
                kx += scales[g] * w[g * n + d];
            }
            phase += kx as f64 * s;
            bin = bin * np as usize + kx.rem_euclid(np) as usize;
        }
        let rot = C64::from_polar(1.0, 2.0 * PI * phase / np as f64);
        spec[bin] += c * rot;
    }
    let mut buf = spec;
    sp.fft().inverse(&mut buf);
    buf.iter().map(|v| v.re).collect()
}

fn pointwise(domain: &Domain, interp: &TrigInterpolant, scales: &[f64]) -> Vec<f64> {
    let n = domain.dim();
    let groups = interp.dim / n;
    let mut x = vec![0.0; n];
    let mut p = vec![0.0; interp.dim];
    (0..domain.len())
        .map(|k| {
            domain.coord(k, &mut x);
            for g in 0..groups {
                for d in 0..n {
                    let v = x[d] * scales[g];
                    p[g * n + d] = v - libm::floor(v);
                }
            }
            interp.eval(&p)
        })
        .collect()
}

/// `g(x/ε)` for `g` on `grid`.
pub fn eval_slow(domain: &Domain, eps: f64, grid: PeriodicGrid, g: &[f64], route: EvalRoute) -> Result<Vec<f64>> {
    if grid.dim() != domain.dim() || g.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let interp = TrigInterpolant::new(&grid.shape(), g);
    Ok(evaluate(domain, eps, &interp, 1, route))
}

/// `g(x/ε, x/ε²)` for `g` on `grid` (node index `y·|Z| + z`).
pub fn eval_two_scale(domain: &Domain, eps: f64, grid: TwoScaleGrid, g: &[f64], route: EvalRoute) -> Result<Vec<f64>> {
    if grid.dim() != domain.dim() || g.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let interp = TrigInterpolant::new(&grid.shape(), g);
    Ok(evaluate(domain, eps, &interp, 2, route))
}

fn evaluate(domain: &Domain, eps: f64, interp: &TrigInterpolant, groups: usize, route: EvalRoute) -> Vec<f64> {
    match (route, integer_inverse(eps)) {
        (EvalRoute::Auto, Some(m)) => {
            let scales = [m, m * m];
            fold(domain, interp, &scales[..groups])
        }
        _ => {
            let scales = [1.0 / eps, 1.0 / (eps * eps)];
            pointwise(domain, interp, &scales[..groups])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolant_reproduces_nodes() {
        let shape = [4usize, 8];
        let vals: Vec<f64> = (0..32).map(|k| libm::sin(k as f64 * 0.7) + 0.1 * k as f64).collect();
        let it = TrigInterpolant::new(&shape, &vals);
        for k in 0..32 {
            let p = [(k / 8) as f64 / 4.0, (k % 8) as f64 / 8.0];
            assert!((it.eval(&p) - vals[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_inverse_detection() {
        assert_eq!(integer_inverse(0.25), Some(4));
        assert_eq!(integer_inverse(1.0 / 3.0), Some(3));
        assert_eq!(integer_inverse(0.3), None);
    }

    #[test]
    fn single_mode_substitution() {
        // g = cos 2πy₁, ε = 1/2 → cos 4πx₁ on the nodes
        let grid = PeriodicGrid::new(2, 8).unwrap();
        let g: Vec<f64> = (0..64).map(|k| libm::cos(2.0 * PI * (k / 8) as f64 / 8.0)).collect();
        for domain in [Domain::torus(2, 16).unwrap(), Domain::square(16).unwrap()] {
            let out = eval_slow(&domain, 0.5, grid, &g, EvalRoute::Auto).unwrap();
            for k in 0..domain.len() {
                let x = domain.coords(k);
                assert!((out[k] - libm::cos(4.0 * PI * x[0])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn folding_matches_pointwise_for_two_scale_fields() {
        let gy = PeriodicGrid::new(2, 4).unwrap();
        let gz = PeriodicGrid::new(2, 8).unwrap();
        let grid = TwoScaleGrid::new(gy, gz).unwrap();
        let g: Vec<f64> =
            (0..grid.len()).map(|k| libm::cos(0.37 * k as f64) * libm::sin(0.011 * (k * k) as f64)).collect();
        for domain in [Domain::torus(2, 16).unwrap(), Domain::square(16).unwrap()] {
            let a = eval_two_scale(&domain, 1.0 / 3.0, grid, &g, EvalRoute::Auto).unwrap();
            let b = eval_two_scale(&domain, 1.0 / 3.0, grid, &g, EvalRoute::Pointwise).unwrap();
            for k in 0..domain.len() {
                assert!((a[k] - b[k]).abs() < 1e-11, "{k}: {} {}", a[k], b[k]);
            }
        }
    }
}
