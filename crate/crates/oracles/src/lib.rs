//! Reference solvers for tests. They share no code with `rshom-core`.
//!
//! * [`dense_stokes`]: assembles the pseudo-spectral periodic Stokes saddle
//!   system with differentiation matrices and solves it by dense LU.
//! * [`stream_function_effective`]: single-scale homogenized tensor in 2D via a
//!   stream-function formulation, rustfft transforms and BiCGSTAB.
//! * [`laminate_effective`]: closed form for `a(z₁)·δ_ij δ_αβ`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

fn t4(n: usize, i: usize, j: usize, a: usize, b: usize) -> usize {
    ((i * n + j) * n + a) * n + b
}

/// Periodic spectral differentiation matrix on `m` points of the unit interval
/// (the Nyquist mode is differentiated to zero).
pub fn diff_matrix_1d(m: usize) -> Vec<f64> {
    let mut d = vec![0.0; m * m];
    for j in 0..m {
        for k in 0..m {
            if j != k {
                let s = if (j + m - k) % 2 == 0 { 1.0 } else { -1.0 };
                d[j * m + k] = PI * s / (PI * (j as f64 - k as f64) / m as f64).tan();
            }
        }
    }
    d
}

/// Projector removing the mean and every mode with a Nyquist component.
fn truncation_projector(m: usize, dim: usize) -> DMatrix<f64> {
    let q1 = DMatrix::from_fn(m, m, |j, k| {
        let alt = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
        (if j == k { 1.0 } else { 0.0 }) - alt / m as f64
    });
    let mut q = q1.clone();
    for _ in 1..dim {
        q = q.kronecker(&q1);
    }
    let total = q.nrows();
    q.add_scalar_mut(-1.0 / total as f64);
    q
}

/// Row-major node stride of `axis` on an `m^dim` grid.
fn stride(m: usize, dim: usize, axis: usize) -> usize {
    m.pow((dim - 1 - axis) as u32)
}

/// Nonzeros of row `p` of the derivative along `axis`.
fn diff_row(d1: &[f64], m: usize, dim: usize, axis: usize, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let s = stride(m, dim, axis);
    let c = (p / s) % m;
    let base = p - c * s;
    (0..m).filter(move |&k| k != c).map(move |k| (base + k * s, d1[c * m + k]))
}

pub struct DenseStokes {
    pub velocity: Vec<Vec<f64>>,
    pub pressure: Vec<f64>,
}

/// Solve `−∂_i(a_ij^{αβ} ∂_j u^β) + ∂_α p = f^α`, `∂_α u^α = h` on the unit
/// torus with `m` points per axis, restricted to the truncated mode set.
///
/// `coeff` holds `n⁴` grid fields indexed `((i·n+j)·n+α)·n+β`.
pub fn dense_stokes(m: usize, dim: usize, coeff: &[Vec<f64>], force: &[Vec<f64>], h: Option<&[f64]>) -> DenseStokes {
    let n = dim;
    let len = m.pow(dim as u32);
    let d1 = diff_matrix_1d(m);
    let pt = truncation_projector(m, dim);
    let size = (n + 1) * len;
    // L blocks: L^{αβ} = −Σ_ij D_i diag(a_ij^{αβ}) D_j
    let mut lmat = DMatrix::<f64>::zeros(n * len, n * len);
    for a in 0..n {
        for b in 0..n {
            let mut block = DMatrix::<f64>::zeros(len, len);
            for i in 0..n {
                for j in 0..n {
                    let c = &coeff[t4(n, i, j, a, b)];
                    if c.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    for p in 0..len {
                        for (q, dv) in diff_row(&d1, m, dim, i, p) {
                            let w = -dv * c[q];
                            for (r, dw) in diff_row(&d1, m, dim, j, q) {
                                block[(p, r)] += w * dw;
                            }
                        }
                    }
                }
            }
            lmat.view_mut((a * len, b * len), (len, len)).copy_from(&block);
        }
    }
    let mut grad = DMatrix::<f64>::zeros(n * len, len);
    for a in 0..n {
        for p in 0..len {
            for (q, dv) in diff_row(&d1, m, dim, a, p) {
                grad[(a * len + p, q)] = dv;
            }
        }
    }
    let mut big_pt = DMatrix::<f64>::zeros(n * len, n * len);
    for a in 0..n {
        big_pt.view_mut((a * len, a * len), (len, len)).copy_from(&pt);
    }
    let ident_n = DMatrix::<f64>::identity(n * len, n * len);
    let ident = DMatrix::<f64>::identity(len, len);
    let mut sys = DMatrix::<f64>::zeros(size, size);
    let uu = &big_pt * &lmat * &big_pt + (&ident_n - &big_pt);
    sys.view_mut((0, 0), (n * len, n * len)).copy_from(&uu);
    sys.view_mut((0, n * len), (n * len, len)).copy_from(&(&big_pt * &grad));
    // divergence rows: D_α u^α, i.e. gradᵀ up to sign (D is antisymmetric)
    let div = -grad.transpose();
    sys.view_mut((n * len, 0), (len, n * len)).copy_from(&(&pt * &div * &big_pt));
    sys.view_mut((n * len, n * len), (len, len)).copy_from(&(&ident - &pt));
    let mut rhs = DVector::<f64>::zeros(size);
    let f = DVector::from_iterator(n * len, force.iter().flatten().copied());
    rhs.rows_mut(0, n * len).copy_from(&(&big_pt * f));
    if let Some(h) = h {
        let hv = DVector::from_column_slice(h);
        rhs.rows_mut(n * len, len).copy_from(&(&pt * hv));
    }
    let x = sys.lu().solve(&rhs).expect("dense saddle system is singular");
    DenseStokes {
        velocity: (0..n).map(|a| x.rows(a * len, len).iter().copied().collect()).collect(),
        pressure: x.rows(n * len, len).iter().copied().collect(),
    }
}

/// Square 2D FFT on `m × m` row-major data.
struct Fft2 {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let m = self.m;
        let plan = if inverse { &self.inv } else { &self.fwd };
        plan.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for c in 0..m {
            for r in 0..m {
                col[r] = data[r * m + c];
            }
            plan.process(&mut col);
            for r in 0..m {
                data[r * m + c] = col[r];
            }
        }
        if inverse {
            let s = 1.0 / (m * m) as f64;
            data.iter_mut().for_each(|v| *v *= s);
        }
    }

    fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&mut d, false);
        d
    }

    fn inverse(&self, s: &[Complex64]) -> Vec<f64> {
        let mut d = s.to_vec();
        self.run(&mut d, true);
        d.iter().map(|v| v.re).collect()
    }
}

struct StreamOperator {
    m: usize,
    fft: Fft2,
    /// `2π k` per axis with the Nyquist entry zeroed, per flat mode.
    kx: Vec<[f64; 2]>,
    keep: Vec<bool>,
    coeff: Vec<Vec<f64>>,
    precond: Vec<f64>,
}

impl StreamOperator {
    fn new(m: usize, coeff: &[Vec<f64>]) -> Self {
        let wave = |c: usize| -> f64 {
            if 2 * c == m {
                0.0
            } else if 2 * c < m {
                2.0 * PI * c as f64
            } else {
                2.0 * PI * (c as f64 - m as f64)
            }
        };
        let mut kx = Vec::with_capacity(m * m);
        let mut keep = Vec::with_capacity(m * m);
        for r in 0..m {
            for c in 0..m {
                kx.push([wave(r), wave(c)]);
                keep.push(!(r == 0 && c == 0) && 2 * r != m && 2 * c != m);
            }
        }
        let mean: Vec<f64> = coeff.iter().map(|f| f.iter().sum::<f64>() / f.len() as f64).collect();
        let precond = kx
            .iter()
            .zip(&keep)
            .map(|(k, &kp)| {
                if !kp {
                    return 0.0;
                }
                let perp = [k[1], -k[0]];
                let mut s = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        for i in 0..2 {
                            for j in 0..2 {
                                s += perp[a] * mean[t4(2, i, j, a, b)] * k[i] * k[j] * perp[b];
                            }
                        }
                    }
                }
                1.0 / s
            })
            .collect();
        StreamOperator { m, fft: Fft2::new(m), kx, keep, coeff: coeff.to_vec(), precond }
    }

    fn deriv(&self, s: &[Complex64], axis: usize) -> Vec<Complex64> {
        s.iter().zip(&self.kx).map(|(v, k)| v * Complex64::new(0.0, k[axis])).collect()
    }

    /// Velocity gradient `∂_j u^β` (index `j·2+β`) of `u = (∂₂ψ, −∂₁ψ)`.
    fn velocity_gradient(&self, psi: &[Complex64]) -> Vec<Vec<f64>> {
        let u = [self.deriv(psi, 1), self.deriv(psi, 0).iter().map(|v| -v).collect::<Vec<_>>()];
        let mut out = Vec::with_capacity(4);
        for j in 0..2 {
            for b in 0..2 {
                out.push(self.fft.inverse(&self.deriv(&u[b], j)));
            }
        }
        out
    }

    /// `(∇^⊥)ᵀ(−div R)` for grid fluxes `R_i^α` at index `i·2+α`.
    fn curl_of_divergence(&self, flux: &[Vec<f64>]) -> Vec<Complex64> {
        let len = self.m * self.m;
        let mut f = [vec![Complex64::new(0.0, 0.0); len], vec![Complex64::new(0.0, 0.0); len]];
        for i in 0..2 {
            for a in 0..2 {
                let d = self.deriv(&self.fft.forward(&flux[i * 2 + a]), i);
                f[a].iter_mut().zip(&d).for_each(|(x, y)| *x -= y);
            }
        }
        let d1f2 = self.deriv(&f[1], 0);
        let d2f1 = self.deriv(&f[0], 1);
        let mut out: Vec<Complex64> = d1f2.iter().zip(&d2f1).map(|(a, b)| a - b).collect();
        for (v, &k) in out.iter_mut().zip(&self.keep) {
            if !k {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    fn flux_of(&self, grad: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let len = self.m * self.m;
        let mut r = vec![vec![0.0; len]; 4];
        for i in 0..2 {
            for a in 0..2 {
                for j in 0..2 {
                    for b in 0..2 {
                        let c = &self.coeff[t4(2, i, j, a, b)];
                        let g = &grad[j * 2 + b];
                        for p in 0..len {
                            r[i * 2 + a][p] += c[p] * g[p];
                        }
                    }
                }
            }
        }
        r
    }

    fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        self.curl_of_divergence(&self.flux_of(&self.velocity_gradient(psi)))
    }

    fn precondition(&self, r: &[Complex64]) -> Vec<Complex64> {
        r.iter().zip(&self.precond).map(|(v, p)| v * p).collect()
    }
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[Complex64]) -> f64 {
    cdot(a, a).re.sqrt()
}

/// Right-preconditioned BiCGSTAB on `A d = b`, stopping on its recursive residual.
fn bicgstab(op: &StreamOperator, b: &[Complex64], tol: f64, max_iter: usize) -> Vec<Complex64> {
    let len = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; len];
    let bn = cnorm(b);
    if bn == 0.0 {
        return x;
    }
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) =
        (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    let mut v = vec![zero; len];
    let mut p = vec![zero; len];
    for _ in 0..max_iter {
        let rho_new = cdot(&r0, &r);
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..len {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        let ph = op.precondition(&p);
        v = op.apply(&ph);
        alpha = rho / cdot(&r0, &v);
        let s: Vec<Complex64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        let sh = op.precondition(&s);
        let t = op.apply(&sh);
        omega = cdot(&t, &s) / cdot(&t, &t);
        for k in 0..len {
            x[k] += alpha * ph[k] + omega * sh[k];
            r[k] = s[k] - omega * t[k];
        }
        if cnorm(&r) <= tol * bn {
            break;
        }
    }
    x
}

/// Iterative refinement around [`bicgstab`]: the recursive residual of a
/// fourth-order operator drifts, so convergence is judged on the true
/// residual in the preconditioned norm.
fn solve_refined(op: &StreamOperator, b: &[Complex64], tol: f64) -> Vec<Complex64> {
    let bn = cnorm(&op.precondition(b));
    let mut x = vec![Complex64::new(0.0, 0.0); b.len()];
    if bn == 0.0 {
        return x;
    }
    for _ in 0..60 {
        let ax = op.apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        if cnorm(&op.precondition(&r)) <= tol * bn {
            return x;
        }
        let d = bicgstab(op, &r, 1e-8, 200);
        x.iter_mut().zip(&d).for_each(|(x, d)| *x += d);
    }
    panic!("stream-function oracle did not converge");
}

/// Effective tensor `â_ij^{αβ} = ⨍ a_ij^{αβ} − a_ik^{αγ} ∂_k χ_j^{γβ}` of a 2D
/// periodic Stokes cell problem, with the divergence-free corrector written
/// as `−χ = ∇^⊥ψ`.
pub fn stream_function_effective(m: usize, coeff: &[Vec<f64>]) -> Vec<f64> {
    let op = StreamOperator::new(m, coeff);
    let len = m * m;
    let mut out = vec![0.0; 16];
    for k in 0..2 {
        for b in 0..2 {
            // flux of the affine part P_k^β: R_i^α = a_ik^{αβ}
            let mut rp = vec![vec![0.0; len]; 4];
            for i in 0..2 {
                for a in 0..2 {
                    rp[i * 2 + a] = coeff[t4(2, i, k, a, b)].clone();
                }
            }
            let rhs: Vec<Complex64> = op.curl_of_divergence(&rp).iter().map(|v| -v).collect();
            let psi = solve_refined(&op, &rhs, 1e-14);
            let grad = op.velocity_gradient(&psi);
            for i in 0..2 {
                for a in 0..2 {
                    let mut s: f64 = coeff[t4(2, i, k, a, b)].iter().sum();
                    for l in 0..2 {
                        for g in 0..2 {
                            let c = &coeff[t4(2, i, l, a, g)];
                            s += c.iter().zip(&grad[l * 2 + g]).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                    out[t4(2, i, k, a, b)] = s / len as f64;
                }
            }
        }
    }
    out
}

/// `a(z₁) δ_ij δ_αβ` in 2D: only `â_11^{22}` departs from the mean, becoming
/// the harmonic mean.
pub fn laminate_effective(arithmetic: f64, harmonic: f64) -> Vec<f64> {
    let mut out = vec![0.0; 16];
    for i in 0..2 {
        for a in 0..2 {
            out[t4(2, i, i, a, a)] = arithmetic;
        }
    }
    out[t4(2, 0, 0, 1, 1)] = harmonic;
    out
}
