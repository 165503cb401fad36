//! Preconditioned conjugate gradients and restarted GMRES over real inner
//! product spaces. Complex arrays are treated as real vectors of twice the
//! length, which is what the spectral solvers need.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub trait Elem: Copy + Default {
    fn rdot(a: Self, b: Self) -> f64;
    fn scaled(self, s: f64) -> Self;
    fn plus(self, o: Self) -> Self;
}

impl Elem for f64 {
    #[inline]
    fn rdot(a: f64, b: f64) -> f64 {
        a * b
    }
    #[inline]
    fn scaled(self, s: f64) -> f64 {
        self * s
    }
    #[inline]
    fn plus(self, o: f64) -> f64 {
        self + o
    }
}

impl Elem for C64 {
    #[inline]
    fn rdot(a: C64, b: C64) -> f64 {
        a.re * b.re + a.im * b.im
    }
    #[inline]
    fn scaled(self, s: f64) -> C64 {
        self * s
    }
    #[inline]
    fn plus(self, o: C64) -> C64 {
        self + o
    }
}

pub fn dot<T: Elem>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| T::rdot(x, y)).sum()
}

pub fn norm<T: Elem>(a: &[T]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += s x`
pub fn axpy<T: Elem>(s: f64, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = yi.plus(xi.scaled(s));
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// Final `‖b − Ax‖` over the reference norm (see [`pcg`]).
    pub residual: f64,
}

/// Preconditioned CG for an operator symmetric positive definite in the
/// `rdot` inner product. `x` holds the initial guess on entry.
///
/// Residuals are measured against `max(‖b‖, reference)`; a positive
/// `reference` keeps a right-hand side that is pure round-off from being
/// chased to relative accuracy.
pub fn pcg<T: Elem>(
    mut apply: impl FnMut(&[T], &mut [T]),
    mut precond: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    rtol: f64,
    reference: f64,
    max_iter: usize,
) -> Result<KrylovReport> {
    let n = b.len();
    let bnorm = norm(b).max(reference);
    if norm(b) <= rtol * bnorm {
        x.iter_mut().for_each(|v| *v = T::default());
        return Ok(KrylovReport { iterations: 0, residual: norm(b) / bnorm.max(f64::MIN_POSITIVE) });
    }
    let mut r = vec![T::default(); n];
    apply(x, &mut r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi.plus(ri.scaled(-1.0));
    }
    let mut z = vec![T::default(); n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![T::default(); n];
    let mut rz = dot(&r, &z);
    let mut res = norm(&r) / bnorm;
    for it in 0..max_iter {
        if res <= rtol {
            return Ok(KrylovReport { iterations: it, residual: res });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SingularSystem);
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        res = norm(&r) / bnorm;
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi.plus(pi.scaled(beta));
        }
    }
    if res <= rtol {
        return Ok(KrylovReport { iterations: max_iter, residual: res });
    }
    Err(Error::NoConvergence { residual: res, iterations: max_iter })
}

/// Right-preconditioned GMRES(`restart`).
pub fn gmres<T: Elem>(
    mut apply: impl FnMut(&[T], &mut [T]),
    mut precond: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    rtol: f64,
    reference: f64,
    max_iter: usize,
    restart: usize,
) -> Result<KrylovReport> {
    let n = b.len();
    let m = restart.max(1);
    let bnorm = norm(b).max(reference);
    if norm(b) <= rtol * bnorm {
        x.iter_mut().for_each(|v| *v = T::default());
        return Ok(KrylovReport { iterations: 0, residual: norm(b) / bnorm.max(f64::MIN_POSITIVE) });
    }
    let mut r = vec![T::default(); n];
    let mut w = vec![T::default(); n];
    let mut z = vec![T::default(); n];
    let mut total = 0;
    loop {
        apply(x, &mut r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi.plus(ri.scaled(-1.0));
        }
        let beta = norm(&r);
        let res = beta / bnorm;
        if res <= rtol {
            return Ok(KrylovReport { iterations: total, residual: res });
        }
        if total >= max_iter {
            return Err(Error::NoConvergence { residual: res, iterations: total });
        }
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v.scaled(1.0 / beta)).collect());
        let mut h = vec![0.0; (m + 1) * m];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < max_iter {
            precond(&basis[k], &mut z);
            apply(&z, &mut w);
            for (j, v) in basis.iter().enumerate() {
                let hj = dot(&w, v);
                h[j * m + k] = hj;
                axpy(-hj, v, &mut w);
            }
            let hn = norm(&w);
            h[(k + 1) * m + k] = hn;
            for j in 0..k {
                let (a, c) = (h[j * m + k], h[(j + 1) * m + k]);
                h[j * m + k] = cs[j] * a + sn[j] * c;
                h[(j + 1) * m + k] = -sn[j] * a + cs[j] * c;
            }
            let (a, c) = (h[k * m + k], h[(k + 1) * m + k]);
            let d = libm::hypot(a, c);
            if d == 0.0 {
                return Err(Error::SingularSystem);
            }
            cs[k] = a / d;
            sn[k] = c / d;
            h[k * m + k] = d;
            h[(k + 1) * m + k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            if g[k].abs() / bnorm <= rtol || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v.scaled(1.0 / hn)).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i * m + j] * y[j];
            }
            y[i] = s / h[i * m + i];
        }
        let mut comb = vec![T::default(); n];
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &basis[j], &mut comb);
        }
        precond(&comb, &mut z);
        axpy(1.0, &z, x);
    }
}
