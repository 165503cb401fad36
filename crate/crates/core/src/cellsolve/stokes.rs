//! Variable-coefficient periodic Stokes solver.
//!
//! Unknowns live in Fourier space on the truncated set of modes (nonzero and
//! free of Nyquist components) and are kept divergence free by construction.
//! The operator `L u = −div(A ∇u)` is applied pseudo-spectrally; the
//! preconditioner is the exact Stokes inverse for the grid-mean coefficient.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::fields::index::t4;
use crate::fields::{ellipticity_bounds, PeriodicGrid, Spectral, Tensor4Field};
use crate::linalg::dense::inverse;
use crate::linalg::krylov::{gmres, norm, pcg, KrylovReport};
use crate::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target of the projected momentum equation.
    pub rtol: f64,
    /// Iteration budget; `None` means `10 · points_per_dim`.
    pub max_iter: Option<usize>,
    /// GMRES restart length, used for nonsymmetric coefficients.
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rtol: 1e-10, max_iter: None, restart: 40 }
    }
}

/// Right-hand side of the momentum equation.
#[derive(Clone, Copy, Debug)]
pub enum Forcing<'a> {
    Zero,
    /// `F = −div R` with `R` given as `n²` fields indexed `i·n + α` (so `F^α = −∂_i R_i^α`).
    Divergence(&'a [Vec<f64>]),
    /// `F^α` given directly.
    Body(&'a [Vec<f64>]),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final projected momentum residual relative to the unprojected forcing.
    pub residual: f64,
    /// `‖div u − h‖` over resolved modes (round-off level by construction).
    pub divergence_residual: f64,
    /// Part of `h` the truncated space cannot carry (its mean and Nyquist modes).
    pub divergence_defect: f64,
}

/// Velocity and pressure with their spectra.
#[derive(Clone, Debug)]
pub struct StokesSolution {
    pub grid: PeriodicGrid,
    pub velocity: Vec<Vec<f64>>,
    pub pressure: Vec<f64>,
    pub velocity_hat: Vec<Vec<C64>>,
    pub pressure_hat: Vec<C64>,
    pub report: SolveReport,
}

struct Workspace {
    spec: Vec<Vec<C64>>,
    real: Vec<Vec<f64>>,
    flux: Vec<Vec<f64>>,
    scratch: Vec<C64>,
}

/// Discrete operator and preconditioner for one coefficient field.
pub struct StokesOperator {
    grid: PeriodicGrid,
    sp: Spectral,
    coeff: Vec<Vec<f64>>,
    /// Nonzero `(i, α, j, β)` entries, grouped by output flux component.
    active: Vec<(usize, usize, usize)>,
    /// Per-mode velocity block of the mean-coefficient saddle inverse, `n²` each.
    precond: Vec<f64>,
    symmetric: bool,
    opts: SolverOptions,
}

impl StokesOperator {
    pub fn new(coeff: &Tensor4Field, opts: SolverOptions) -> Result<Self> {
        let grid = coeff.grid;
        let n = grid.dim();
        if coeff.components.len() != n.pow(4) {
            return Err(Error::GridMismatch);
        }
        let len = grid.len();
        let mut t = vec![0.0; n.pow(4)];
        for p in 0..len {
            coeff.at(p, &mut t);
            if !(ellipticity_bounds(&t, n).0 > 0.0) {
                return Err(Error::SingularSystem);
            }
        }
        let sp = Spectral::new(&grid.shape());
        let mut active = Vec::new();
        for i in 0..n {
            for a in 0..n {
                for j in 0..n {
                    for b in 0..n {
                        let c = t4(n, i, j, a, b);
                        if coeff.components[c].iter().any(|&v| v != 0.0) {
                            active.push((i * n + a, j * n + b, c));
                        }
                    }
                }
            }
        }
        let mean = coeff.means();
        let precond = mode_inverses(&sp, &mean, n)?;
        let symmetric = coeff.is_symmetric(1e-14);
        Ok(StokesOperator { grid, sp, coeff: coeff.components.clone(), active, precond, symmetric, opts })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn workspace(&self) -> Workspace {
        let n = self.grid.dim();
        let len = self.grid.len();
        Workspace {
            spec: vec![vec![ZERO; len]; n * n],
            real: vec![vec![0.0; len]; n * n],
            flux: vec![vec![0.0; len]; n * n],
            scratch: vec![ZERO; len],
        }
    }

    /// `(L v)^` for a spectral velocity stored component-major (`n · len`).
    fn apply_raw(&self, v: &[C64], out: &mut [C64], ws: &mut Workspace) {
        let n = self.grid.dim();
        let len = self.grid.len();
        let sp = &self.sp;
        for j in 0..n {
            for b in 0..n {
                let s = &mut ws.spec[j * n + b];
                let vb = &v[b * len..(b + 1) * len];
                for m in 0..len {
                    s[m] = vb[m] * C64::new(0.0, sp.dk(m, j));
                }
            }
        }
        inverse_all(sp, &ws.spec, &mut ws.real, &mut ws.scratch);
        for f in ws.flux.iter_mut() {
            f.iter_mut().for_each(|x| *x = 0.0);
        }
        for &(out_c, in_c, c) in &self.active {
            let a = &self.coeff[c];
            let g = &ws.real[in_c];
            let f = &mut ws.flux[out_c];
            for p in 0..len {
                f[p] += a[p] * g[p];
            }
        }
        forward_all(sp, &ws.flux, &mut ws.spec);
        for a in 0..n {
            let o = &mut out[a * len..(a + 1) * len];
            o.iter_mut().for_each(|x| *x = ZERO);
            for i in 0..n {
                let r = &ws.spec[i * n + a];
                for m in 0..len {
                    o[m] -= r[m] * C64::new(0.0, sp.dk(m, i));
                }
            }
        }
    }

    /// Leray projection onto divergence-free resolved modes, in place.
    fn project(&self, v: &mut [C64]) {
        let n = self.grid.dim();
        let len = self.grid.len();
        for m in 0..len {
            if !self.sp.is_resolved(m) {
                for a in 0..n {
                    v[a * len + m] = ZERO;
                }
                continue;
            }
            let k2 = self.sp.dk_norm_sqr(m, 0..n);
            let mut kv = ZERO;
            for a in 0..n {
                kv += v[a * len + m] * self.sp.dk(m, a);
            }
            for a in 0..n {
                v[a * len + m] -= kv * (self.sp.dk(m, a) / k2);
            }
        }
    }

    fn precondition(&self, r: &[C64], z: &mut [C64]) {
        let n = self.grid.dim();
        let len = self.grid.len();
        let mut tmp = [ZERO; 8];
        for m in 0..len {
            let k = &self.precond[m * n * n..(m + 1) * n * n];
            for a in 0..n {
                let mut s = ZERO;
                for b in 0..n {
                    s += r[b * len + m] * k[a * n + b];
                }
                tmp[a] = s;
            }
            for a in 0..n {
                z[a * len + m] = tmp[a];
            }
        }
    }

    /// `L u` for a real velocity field, evaluated on the grid.
    pub fn apply(&self, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.grid.dim();
        let len = self.grid.len();
        let mut v = vec![ZERO; n * len];
        for a in 0..n {
            self.sp.forward_into(&u[a], &mut v[a * len..(a + 1) * len]);
        }
        let mut out = vec![ZERO; n * len];
        let mut ws = self.workspace();
        self.apply_raw(&v, &mut out, &mut ws);
        (0..n).map(|a| self.sp.inverse(&out[a * len..(a + 1) * len])).collect()
    }

    fn forcing_hat(&self, forcing: Forcing<'_>) -> Vec<C64> {
        let n = self.grid.dim();
        let len = self.grid.len();
        let mut f = vec![ZERO; n * len];
        match forcing {
            Forcing::Zero => {}
            Forcing::Body(b) => {
                for a in 0..n {
                    self.sp.forward_into(&b[a], &mut f[a * len..(a + 1) * len]);
                }
            }
            Forcing::Divergence(r) => {
                let refs: Vec<&[f64]> = r.iter().map(|x| x.as_slice()).collect();
                let rh = self.sp.forward_many(&refs);
                for a in 0..n {
                    for i in 0..n {
                        let s = &rh[i * n + a];
                        for m in 0..len {
                            f[a * len + m] -= s[m] * C64::new(0.0, self.sp.dk(m, i));
                        }
                    }
                }
            }
        }
        f
    }

    /// Solve `L u + ∇p = F`, `div u = h` with mean-zero `u` and `p`.
    pub fn solve(&self, forcing: Forcing<'_>, divergence: Option<&[f64]>) -> Result<StokesSolution> {
        let n = self.grid.dim();
        let len = self.grid.len();
        let sp = &self.sp;
        let fhat = self.forcing_hat(forcing);
        let mut ws = self.workspace();

        // lift the divergence datum with u_h = ∇Δ⁻¹h on resolved modes
        let mut lift = vec![ZERO; n * len];
        let mut defect = 0.0;
        let mut hhat = vec![ZERO; len];
        if let Some(h) = divergence {
            sp.forward_into(h, &mut hhat);
            for m in 0..len {
                if !sp.is_resolved(m) {
                    defect += hhat[m].norm_sqr();
                    continue;
                }
                let k2 = sp.dk_norm_sqr(m, 0..n);
                for a in 0..n {
                    // û = −i k ĥ / |k|² with k = 2πκ, so that i k·û = ĥ
                    lift[a * len + m] = hhat[m] * C64::new(0.0, -sp.dk(m, a) / k2);
                }
            }
        }
        let mut b = fhat.clone();
        if divergence.is_some() {
            let mut lu = vec![ZERO; n * len];
            self.apply_raw(&lift, &mut lu, &mut ws);
            for (bi, li) in b.iter_mut().zip(&lu) {
                *bi -= li;
            }
        }
        // the contract measures the residual against the unprojected forcing
        let reference = norm(&b);
        self.project(&mut b);

        let max_iter = self.opts.max_iter.unwrap_or(10 * self.grid.points());
        let mut x = vec![ZERO; n * len];
        let apply = |v: &[C64], out: &mut [C64]| {
            self.apply_raw(v, out, &mut ws);
            self.project(out);
        };
        let pre = |r: &[C64], z: &mut [C64]| self.precondition(r, z);
        let KrylovReport { iterations, residual } = if self.symmetric {
            pcg(apply, pre, &b, &mut x, self.opts.rtol, reference, max_iter)?
        } else {
            gmres(apply, pre, &b, &mut x, self.opts.rtol, reference, max_iter, self.opts.restart)?
        };

        let mut u = x;
        for (ui, li) in u.iter_mut().zip(&lift) {
            *ui += li;
        }
        let mut ws = self.workspace();
        let mut lu = vec![ZERO; n * len];
        self.apply_raw(&u, &mut lu, &mut ws);
        let mut phat = vec![ZERO; len];
        let mut div_res = 0.0;
        for m in 0..len {
            if !sp.is_resolved(m) {
                continue;
            }
            let k2 = sp.dk_norm_sqr(m, 0..n);
            let mut kr = ZERO;
            let mut ku = ZERO;
            for a in 0..n {
                let k = sp.dk(m, a);
                kr += (fhat[a * len + m] - lu[a * len + m]) * k;
                ku += u[a * len + m] * C64::new(0.0, k);
            }
            // ∇p = F − L u on the gradient part: i k p̂ = r̂_∥
            phat[m] = kr * C64::new(0.0, -1.0 / k2);
            div_res += (ku - hhat[m]).norm_sqr();
        }
        let velocity_hat: Vec<Vec<C64>> = (0..n).map(|a| u[a * len..(a + 1) * len].to_vec()).collect();
        let refs: Vec<&[C64]> = velocity_hat.iter().map(|v| v.as_slice()).collect();
        let velocity = sp.inverse_many(&refs);
        let pressure = sp.inverse(&phat);
        Ok(StokesSolution {
            grid: self.grid,
            velocity,
            pressure,
            velocity_hat,
            pressure_hat: phat,
            report: SolveReport {
                iterations,
                residual,
                divergence_residual: libm::sqrt(div_res),
                divergence_defect: libm::sqrt(defect),
            },
        })
    }
}

/// Generic cell kernel: solve `−div(A∇u) + ∇p = −div R` on the unit torus.
pub fn stokes_cell_solve(
    coeff: &Tensor4Field,
    rhs_divergence_form: &[Vec<f64>],
    opts: SolverOptions,
) -> Result<StokesSolution> {
    StokesOperator::new(coeff, opts)?.solve(Forcing::Divergence(rhs_divergence_form), None)
}

fn inverse_all(sp: &Spectral, spec: &[Vec<C64>], out: &mut [Vec<f64>], scratch: &mut [C64]) {
    let mut i = 0;
    while i < spec.len() {
        if i + 1 < spec.len() {
            let (lo, hi) = out.split_at_mut(i + 1);
            sp.inverse_pair(&spec[i], &spec[i + 1], &mut lo[i], &mut hi[0], scratch);
            i += 2;
        } else {
            sp.inverse_into(&spec[i], &mut out[i], scratch);
            i += 1;
        }
    }
}

fn forward_all(sp: &Spectral, real: &[Vec<f64>], out: &mut [Vec<C64>]) {
    let mut i = 0;
    while i < real.len() {
        if i + 1 < real.len() {
            let (lo, hi) = out.split_at_mut(i + 1);
            sp.forward_pair(&real[i], &real[i + 1], &mut lo[i], &mut hi[0]);
            i += 2;
        } else {
            sp.forward_into(&real[i], &mut out[i]);
            i += 1;
        }
    }
}

/// Velocity block of `[[M(k), k], [kᵀ, 0]]⁻¹` per resolved mode, where
/// `M_{αβ}(k) = Σ_ij ā_ij^{αβ} (2πk_i)(2πk_j)`.
pub(crate) fn mode_inverses(sp: &Spectral, abar: &[f64], n: usize) -> Result<Vec<f64>> {
    let len = sp.len();
    let mut out = vec![0.0; len * n * n];
    let mut mmat = vec![0.0; n * n];
    for m in 0..len {
        if !sp.is_resolved(m) {
            continue;
        }
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += abar[t4(n, i, j, a, b)] * sp.dk(m, i) * sp.dk(m, j);
                    }
                }
                mmat[a * n + b] = s;
            }
        }
        let minv = inverse(&mmat, n).ok_or(Error::SingularSystem)?;
        let k: Vec<f64> = (0..n).map(|a| sp.dk(m, a)).collect();
        let mk: Vec<f64> = (0..n).map(|a| (0..n).map(|b| minv[a * n + b] * k[b]).sum()).collect();
        let km: Vec<f64> = (0..n).map(|b| (0..n).map(|a| k[a] * minv[a * n + b]).sum()).collect();
        let s: f64 = (0..n).map(|a| k[a] * mk[a]).sum();
        let dst = &mut out[m * n * n..(m + 1) * n * n];
        for a in 0..n {
            for b in 0..n {
                dst[a * n + b] = minv[a * n + b] - mk[a] * km[b] / s;
            }
        }
    }
    Ok(out)
}

/// Solve the constant-coefficient problem mode by mode (no iteration).
pub fn solve_constant(
    grid: PeriodicGrid,
    tensor: &[f64],
    forcing: &[Vec<f64>],
    divergence: Option<&[f64]>,
) -> Result<StokesSolution> {
    let coeff = Tensor4Field::constant(grid, tensor);
    let op = StokesOperator::new(&coeff, SolverOptions { rtol: 1e-14, max_iter: Some(4), restart: 4 })?;
    op.solve(Forcing::Body(forcing), divergence)
}
