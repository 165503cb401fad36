//! Staggered (MAC) finite differences for `−div(A∇u) + ∇p = f`, `div u = h`
//! on the unit square with Dirichlet data.
//!
//! `u¹` lives on vertical faces `(i h, (j+½) h)`, `u²` on horizontal faces and
//! `p` at cell centers. The flux `σ_i^α = a_ij^{αβ} ∂_j u^β` is needed at
//! cell centers for `i = α` and at vertices for `i ≠ α`. Each of those points
//! has two gradient entries that are natural differences there; the other two
//! are averaged from the four neighbouring points of the other kind. Boundary
//! vertices use ghost values `2g − u` for the tangential component and average
//! only the interior centers.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::fields::index::t4;
use crate::linalg::krylov::{gmres, KrylovReport};
use crate::Result;

/// Boundary data sampled where the discretization needs it.
pub(crate) struct BoundaryTrace {
    /// `g¹` on the faces `x₁ = 0` and `x₁ = 1` (normal component), `N` each.
    pub u1_lo: Vec<f64>,
    pub u1_hi: Vec<f64>,
    /// `g²` on `x₂ = 0` and `x₂ = 1`.
    pub u2_lo: Vec<f64>,
    pub u2_hi: Vec<f64>,
    /// Tangential data at boundary vertices, `N + 1` each:
    /// `g¹` on `x₂ = 0, 1` and `g²` on `x₁ = 0, 1`.
    pub t1_lo: Vec<f64>,
    pub t1_hi: Vec<f64>,
    pub t2_lo: Vec<f64>,
    pub t2_hi: Vec<f64>,
}

impl BoundaryTrace {
    pub fn sample(n: usize, g: &dyn Fn(&[f64], &mut [f64])) -> Self {
        let h = 1.0 / n as f64;
        let mut v = [0.0; 2];
        let mut at = |x: f64, y: f64, c: usize| {
            g(&[x, y], &mut v);
            v[c]
        };
        let c = |j: usize| (j as f64 + 0.5) * h;
        let e = |j: usize| j as f64 * h;
        BoundaryTrace {
            u1_lo: (0..n).map(|j| at(0.0, c(j), 0)).collect(),
            u1_hi: (0..n).map(|j| at(1.0, c(j), 0)).collect(),
            u2_lo: (0..n).map(|j| at(c(j), 0.0, 1)).collect(),
            u2_hi: (0..n).map(|j| at(c(j), 1.0, 1)).collect(),
            t1_lo: (0..=n).map(|j| at(e(j), 0.0, 0)).collect(),
            t1_hi: (0..=n).map(|j| at(e(j), 1.0, 0)).collect(),
            t2_lo: (0..=n).map(|j| at(0.0, e(j), 1)).collect(),
            t2_hi: (0..=n).map(|j| at(1.0, e(j), 1)).collect(),
        }
    }

    pub fn zero(n: usize) -> Self {
        BoundaryTrace {
            u1_lo: vec![0.0; n],
            u1_hi: vec![0.0; n],
            u2_lo: vec![0.0; n],
            u2_hi: vec![0.0; n],
            t1_lo: vec![0.0; n + 1],
            t1_hi: vec![0.0; n + 1],
            t2_lo: vec![0.0; n + 1],
            t2_hi: vec![0.0; n + 1],
        }
    }

    /// `Σ g·n |face|` over the boundary.
    pub fn outflow(&self, h: f64) -> f64 {
        let s = |v: &[f64]| v.iter().sum::<f64>();
        h * (s(&self.u1_hi) - s(&self.u1_lo) + s(&self.u2_hi) - s(&self.u2_lo))
    }

    /// `‖g‖_{L²(∂Ω)}` by the midpoint rule on boundary faces.
    pub fn l2_norm(&self, h: f64) -> f64 {
        // normal components at face midpoints; tangential ones averaged from vertices
        let mut s = 0.0;
        for v in [&self.u1_lo, &self.u1_hi, &self.u2_lo, &self.u2_hi] {
            s += v.iter().map(|x| x * x).sum::<f64>();
        }
        for v in [&self.t1_lo, &self.t1_hi, &self.t2_lo, &self.t2_hi] {
            s += v.windows(2).map(|w| 0.25 * (w[0] + w[1]) * (w[0] + w[1])).sum::<f64>();
        }
        libm::sqrt(s * h)
    }
}

/// Face velocities (boundary faces included) and cell pressures.
#[derive(Clone, Debug)]
pub struct Staggered {
    pub n: usize,
    /// `(N+1)·N`, index `i·N + j` for the face at `(i h, (j+½) h)`.
    pub u1: Vec<f64>,
    /// `N·(N+1)`, index `i·(N+1) + j` for the face at `((i+½) h, j h)`.
    pub u2: Vec<f64>,
    pub p: Vec<f64>,
}

impl Staggered {
    /// Discrete divergence at cell centers.
    pub fn divergence(&self) -> Vec<f64> {
        let n = self.n;
        let inv = n as f64;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = (self.u1[(i + 1) * n + j] - self.u1[i * n + j] + self.u2[i * (n + 1) + j + 1]
                    - self.u2[i * (n + 1) + j])
                    * inv;
            }
        }
        d
    }

    /// Face values averaged to cell centers.
    pub fn centered(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 0.5 * (self.u1[i * n + j] + self.u1[(i + 1) * n + j]);
                b[i * n + j] = 0.5 * (self.u2[i * (n + 1) + j] + self.u2[i * (n + 1) + j + 1]);
            }
        }
        vec![a, b]
    }
}

pub(crate) struct MacOperator {
    n: usize,
    /// Full `a_ij^{αβ}` at cell centers and at vertices.
    center: Vec<[f64; 16]>,
    vertex: Vec<[f64; 16]>,
    /// Scalar used by the preconditioner.
    cbar: f64,
    q_node: Vec<f64>,
    q_center: Vec<f64>,
    lam_node: Vec<f64>,
    lam_center: Vec<f64>,
}

struct Fluxes {
    s11: Vec<f64>,
    s22: Vec<f64>,
    s21: Vec<f64>,
    s12: Vec<f64>,
}

impl MacOperator {
    pub fn new(n: usize, coeff: &dyn Fn(&[f64], &mut [f64])) -> Self {
        let h = 1.0 / n as f64;
        let mut t = [0.0; 16];
        let center: Vec<[f64; 16]> = (0..n * n)
            .map(|k| {
                coeff(&[((k / n) as f64 + 0.5) * h, ((k % n) as f64 + 0.5) * h], &mut t);
                t
            })
            .collect();
        let vertex: Vec<[f64; 16]> = (0..(n + 1) * (n + 1))
            .map(|k| {
                coeff(&[(k / (n + 1)) as f64 * h, (k % (n + 1)) as f64 * h], &mut t);
                t
            })
            .collect();
        let cbar = center
            .iter()
            .map(|a| (0..2).flat_map(|i| (0..2).map(move |al| a[t4(2, i, i, al, al)])).sum::<f64>() / 4.0)
            .sum::<f64>()
            / (n * n) as f64;
        let (q_node, lam_node) = sine_basis(n, false);
        let (q_center, lam_center) = sine_basis(n, true);
        MacOperator { n, center, vertex, cbar, q_node, q_center, lam_node, lam_center }
    }

    fn fluxes(&self, u1: &[f64], u2: &[f64], bt: &BoundaryTrace) -> Fluxes {
        let n = self.n;
        let nv = n + 1;
        let inv = n as f64;
        // vertex-natural gradients: ∂₂u¹ and ∂₁u²
        let mut d2u1_v = vec![0.0; nv * nv];
        let mut d1u2_v = vec![0.0; nv * nv];
        for a in 0..nv {
            for b in 0..nv {
                let k = a * nv + b;
                d2u1_v[k] = if b == 0 {
                    2.0 * (u1[a * n] - bt.t1_lo[a]) * inv
                } else if b == n {
                    2.0 * (bt.t1_hi[a] - u1[a * n + n - 1]) * inv
                } else {
                    (u1[a * n + b] - u1[a * n + b - 1]) * inv
                };
                d1u2_v[k] = if a == 0 {
                    2.0 * (u2[b] - bt.t2_lo[b]) * inv
                } else if a == n {
                    2.0 * (bt.t2_hi[b] - u2[(n - 1) * nv + b]) * inv
                } else {
                    (u2[a * nv + b] - u2[(a - 1) * nv + b]) * inv
                };
            }
        }
        // center-natural gradients: ∂₁u¹ and ∂₂u²
        let mut d1u1_c = vec![0.0; n * n];
        let mut d2u2_c = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                d1u1_c[a * n + b] = (u1[(a + 1) * n + b] - u1[a * n + b]) * inv;
                d2u2_c[a * n + b] = (u2[a * nv + b + 1] - u2[a * nv + b]) * inv;
            }
        }
        let mut s11 = vec![0.0; n * n];
        let mut s22 = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let v = [a * nv + b, (a + 1) * nv + b, a * nv + b + 1, (a + 1) * nv + b + 1];
                let d2u1 = 0.25 * v.iter().map(|&k| d2u1_v[k]).sum::<f64>();
                let d1u2 = 0.25 * v.iter().map(|&k| d1u2_v[k]).sum::<f64>();
                let k = a * n + b;
                // g[j][β] = ∂_j u^β
                let g = [[d1u1_c[k], d1u2], [d2u1, d2u2_c[k]]];
                let t = &self.center[k];
                s11[k] = contract(t, 0, 0, &g);
                s22[k] = contract(t, 1, 1, &g);
            }
        }
        let mut s21 = vec![0.0; nv * nv];
        let mut s12 = vec![0.0; nv * nv];
        for a in 0..nv {
            for b in 0..nv {
                let (mut d1u1, mut d2u2, mut cnt) = (0.0, 0.0, 0.0);
                for ca in a.saturating_sub(1)..(a + 1).min(n) {
                    for cb in b.saturating_sub(1)..(b + 1).min(n) {
                        d1u1 += d1u1_c[ca * n + cb];
                        d2u2 += d2u2_c[ca * n + cb];
                        cnt += 1.0;
                    }
                }
                let k = a * nv + b;
                let g = [[d1u1 / cnt, d1u2_v[k]], [d2u1_v[k], d2u2 / cnt]];
                let t = &self.vertex[k];
                s21[k] = contract(t, 1, 0, &g);
                s12[k] = contract(t, 0, 1, &g);
            }
        }
        Fluxes { s11, s22, s21, s12 }
    }

    /// Momentum residual rows `−div σ + ∇p` at interior faces and `−div u`
    /// at centers, for full face arrays.
    fn apply_full(&self, u1: &[f64], u2: &[f64], p: &[f64], bt: &BoundaryTrace, out: &mut [f64]) {
        let n = self.n;
        let nv = n + 1;
        let inv = n as f64;
        let f = self.fluxes(u1, u2, bt);
        let o1 = (n - 1) * n;
        let o2 = o1 + n * (n - 1);
        for a in 1..n {
            for b in 0..n {
                let div = (f.s11[a * n + b] - f.s11[(a - 1) * n + b]) + (f.s21[a * nv + b + 1] - f.s21[a * nv + b]);
                out[(a - 1) * n + b] = (-div + p[a * n + b] - p[(a - 1) * n + b]) * inv;
            }
        }
        for a in 0..n {
            for b in 1..n {
                let div = (f.s22[a * n + b] - f.s22[a * n + b - 1]) + (f.s12[(a + 1) * nv + b] - f.s12[a * nv + b]);
                out[o1 + a * (n - 1) + b - 1] = (-div + p[a * n + b] - p[a * n + b - 1]) * inv;
            }
        }
        for a in 0..n {
            for b in 0..n {
                let d = u1[(a + 1) * n + b] - u1[a * n + b] + u2[a * nv + b + 1] - u2[a * nv + b];
                out[o2 + a * n + b] = -d * inv;
            }
        }
    }

    pub fn unknowns(&self) -> usize {
        let n = self.n;
        2 * (n - 1) * n + n * n
    }

    /// Scatter the unknown vector into full face arrays with boundary values.
    fn expand(&self, x: &[f64], bt: &BoundaryTrace) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let nv = n + 1;
        let o1 = (n - 1) * n;
        let mut u1 = vec![0.0; nv * n];
        let mut u2 = vec![0.0; n * nv];
        u1[..n].copy_from_slice(&bt.u1_lo);
        u1[n * n..].copy_from_slice(&bt.u1_hi);
        u1[n..n * n].copy_from_slice(&x[..o1]);
        for a in 0..n {
            u2[a * nv] = bt.u2_lo[a];
            u2[a * nv + n] = bt.u2_hi[a];
            u2[a * nv + 1..a * nv + n].copy_from_slice(&x[o1 + a * (n - 1)..o1 + (a + 1) * (n - 1)]);
        }
        (u1, u2)
    }

    fn apply(&self, x: &[f64], out: &mut [f64], zero: &BoundaryTrace) {
        let (u1, u2) = self.expand(x, zero);
        let o2 = 2 * (self.n - 1) * self.n;
        self.apply_full(&u1, &u2, &x[o2..], zero, out);
    }

    /// Block-diagonal preconditioner: `(c̄ Δ_h)⁻¹` per velocity component
    /// and `c̄` times the mean-free part for the pressure.
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        let o1 = (n - 1) * n;
        let o2 = 2 * o1;
        let h2 = 1.0 / (n * n) as f64;
        let s = h2 / self.cbar;
        // u¹: node axis (N−1) then center axis (N)
        solve_separable(
            &r[..o1],
            &mut z[..o1],
            n - 1,
            n,
            &self.q_node,
            &self.q_center,
            &self.lam_node,
            &self.lam_center,
            s,
        );
        solve_separable(
            &r[o1..o2],
            &mut z[o1..o2],
            n,
            n - 1,
            &self.q_center,
            &self.q_node,
            &self.lam_center,
            &self.lam_node,
            s,
        );
        let m = r[o2..].iter().sum::<f64>() / (n * n) as f64;
        for (zi, ri) in z[o2..].iter_mut().zip(&r[o2..]) {
            *zi = self.cbar * (ri - m);
        }
    }
}

/// `Σ_{j,β} a_ij^{αβ} g[j][β]`.
#[inline]
fn contract(t: &[f64; 16], i: usize, al: usize, g: &[[f64; 2]; 2]) -> f64 {
    let mut s = 0.0;
    for j in 0..2 {
        for b in 0..2 {
            s += t[t4(2, i, j, al, b)] * g[j][b];
        }
    }
    s
}

/// Orthonormal eigenvectors (column-major, `m × m`) and eigenvalues of the
/// 1D Dirichlet second-difference matrix: `m = N − 1` node unknowns, or
/// `m = N` cell unknowns with mirrored ghosts.
fn sine_basis(n: usize, cells: bool) -> (Vec<f64>, Vec<f64>) {
    let m = if cells { n } else { n - 1 };
    let mut q = vec![0.0; m * m];
    let mut lam = vec![0.0; m];
    for k in 0..m {
        let theta = PI * (k + 1) as f64 / n as f64;
        lam[k] = 2.0 - 2.0 * libm::cos(theta);
        let col = &mut q[k * m..(k + 1) * m];
        for (j, v) in col.iter_mut().enumerate() {
            let x = if cells { j as f64 + 0.5 } else { (j + 1) as f64 };
            *v = libm::sin(theta * x);
        }
        let nrm = libm::sqrt(col.iter().map(|v| v * v).sum::<f64>());
        col.iter_mut().for_each(|v| *v /= nrm);
    }
    (q, lam)
}

/// `z = s · (T_a ⊗ I + I ⊗ T_b)⁻¹ r` for an `ma × mb` row-major array.
#[allow(clippy::too_many_arguments)]
fn solve_separable(
    r: &[f64],
    z: &mut [f64],
    ma: usize,
    mb: usize,
    qa: &[f64],
    qb: &[f64],
    la: &[f64],
    lb: &[f64],
    s: f64,
) {
    // along b: t[a][l] = Σ_j r[a][j] qb[l][j]
    let mut t = vec![0.0; ma * mb];
    for a in 0..ma {
        let row = &r[a * mb..(a + 1) * mb];
        for l in 0..mb {
            let col = &qb[l * mb..(l + 1) * mb];
            t[a * mb + l] = row.iter().zip(col).map(|(x, y)| x * y).sum();
        }
    }
    // along a: w[k][l] = Σ_a qa[k][a] t[a][l]
    let mut w = vec![0.0; ma * mb];
    for k in 0..ma {
        let col = &qa[k * ma..(k + 1) * ma];
        let dst = &mut w[k * mb..(k + 1) * mb];
        for (a, &c) in col.iter().enumerate() {
            let src = &t[a * mb..(a + 1) * mb];
            dst.iter_mut().zip(src).for_each(|(d, v)| *d += c * v);
        }
        for (l, d) in dst.iter_mut().enumerate() {
            *d *= s / (la[k] + lb[l]);
        }
    }
    // back along a: t[a][l] = Σ_k qa[k][a] w[k][l]
    t.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..ma {
        let col = &qa[k * ma..(k + 1) * ma];
        let src = &w[k * mb..(k + 1) * mb];
        for (a, &c) in col.iter().enumerate() {
            let dst = &mut t[a * mb..(a + 1) * mb];
            dst.iter_mut().zip(src).for_each(|(d, v)| *d += c * v);
        }
    }
    // back along b: z[a][j] = Σ_l t[a][l] qb[l][j]
    for a in 0..ma {
        let dst = &mut z[a * mb..(a + 1) * mb];
        dst.iter_mut().for_each(|v| *v = 0.0);
        for l in 0..mb {
            let c = t[a * mb + l];
            let col = &qb[l * mb..(l + 1) * mb];
            dst.iter_mut().zip(col).for_each(|(d, v)| *d += c * v);
        }
    }
}

pub(crate) struct MacSolve {
    pub state: Staggered,
    pub krylov: KrylovReport,
    /// `‖div u − h‖` with `h` after the compatibility shift.
    pub divergence_residual: f64,
    /// `h² Σ h_c − Σ g·n |face|` before the shift.
    pub compatibility_defect: f64,
}

/// Solve with forcing sampled at faces and `h` at centers.
pub(crate) fn solve_mac(
    op: &MacOperator,
    forcing: &dyn Fn(&[f64], &mut [f64]),
    divergence: Option<&dyn Fn(&[f64]) -> f64>,
    bt: &BoundaryTrace,
    rtol: f64,
    max_iter: usize,
    restart: usize,
) -> Result<MacSolve> {
    let n = op.n;
    let h = 1.0 / n as f64;
    let o1 = (n - 1) * n;
    let o2 = 2 * o1;
    let len = op.unknowns();
    let mut b = vec![0.0; len];
    let mut fv = [0.0; 2];
    for a in 1..n {
        for j in 0..n {
            forcing(&[a as f64 * h, (j as f64 + 0.5) * h], &mut fv);
            b[(a - 1) * n + j] = fv[0];
        }
    }
    for a in 0..n {
        for j in 1..n {
            forcing(&[(a as f64 + 0.5) * h, j as f64 * h], &mut fv);
            b[o1 + a * (n - 1) + j - 1] = fv[1];
        }
    }
    let mut hc: Vec<f64> = match divergence {
        Some(d) => (0..n * n).map(|k| d(&[((k / n) as f64 + 0.5) * h, ((k % n) as f64 + 0.5) * h])).collect(),
        None => vec![0.0; n * n],
    };
    let defect = h * h * hc.iter().sum::<f64>() - bt.outflow(h);
    let shift = defect / (h * h * (n * n) as f64);
    hc.iter_mut().for_each(|v| *v -= shift);
    for (k, v) in hc.iter().enumerate() {
        b[o2 + k] = -v;
    }
    // move the boundary values to the right-hand side
    let zero = BoundaryTrace::zero(n);
    let (l1, l2) = op.expand(&vec![0.0; len], bt);
    let mut lift = vec![0.0; len];
    op.apply_full(&l1, &l2, &vec![0.0; n * n], bt, &mut lift);
    b.iter_mut().zip(&lift).for_each(|(bi, li)| *bi -= li);
    let reference = libm::sqrt(b.iter().map(|v| v * v).sum::<f64>());

    let mut x = vec![0.0; len];
    let krylov = gmres(
        |v: &[f64], out: &mut [f64]| op.apply(v, out, &zero),
        |r: &[f64], z: &mut [f64]| op.precondition(r, z),
        &b,
        &mut x,
        rtol,
        reference,
        max_iter,
        restart,
    )?;
    let (u1, u2) = op.expand(&x, bt);
    let mut p = x[o2..].to_vec();
    let pm = p.iter().sum::<f64>() / (n * n) as f64;
    p.iter_mut().for_each(|v| *v -= pm);
    let state = Staggered { n, u1, u2, p };
    let div = state.divergence();
    let divergence_residual = libm::sqrt(div.iter().zip(&hc).map(|(d, h)| (d - h) * (d - h)).sum::<f64>() * h * h);
    Ok(MacSolve { state, krylov, divergence_residual, compatibility_defect: defect })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_bases_diagonalize_the_stencils() {
        for cells in [false, true] {
            let n = 8;
            let (q, lam) = sine_basis(n, cells);
            let m = lam.len();
            for k in 0..m {
                let v = &q[k * m..(k + 1) * m];
                for j in 0..m {
                    let left = if j > 0 {
                        v[j - 1]
                    } else if cells {
                        -v[0]
                    } else {
                        0.0
                    };
                    let right = if j + 1 < m {
                        v[j + 1]
                    } else if cells {
                        -v[m - 1]
                    } else {
                        0.0
                    };
                    let tv = 2.0 * v[j] - left - right;
                    assert!((tv - lam[k] * v[j]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn preconditioner_inverts_the_laplacian_blocks() {
        let n = 8;
        let op = MacOperator::new(n, &|_, t| {
            t.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..2 {
                for a in 0..2 {
                    t[t4(2, i, i, a, a)] = 1.0;
                }
            }
        });
        let zero = BoundaryTrace::zero(n);
        let len = op.unknowns();
        let o2 = 2 * (n - 1) * n;
        let mut x: Vec<f64> = (0..len).map(|k| libm::sin(k as f64 * 1.3)).collect();
        x[o2..].iter_mut().for_each(|v| *v = 0.0);
        let mut ax = vec![0.0; len];
        op.apply(&x, &mut ax, &zero);
        let mut back = vec![0.0; len];
        op.precondition(&ax[..], &mut back);
        for k in 0..o2 {
            assert!((back[k] - x[k]).abs() < 1e-11, "{k}");
        }
    }
}
