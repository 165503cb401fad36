use alloc::vec;
use alloc::vec::Vec;

use super::cells::{flux_fields, y_derivative, z_derivative, CorrectorSet};
use crate::effective::slow_gradients;
use crate::fields::index::{chi, e5, pi, q3, t4};
use crate::fields::{Domain, Spectral};
use crate::finesolve::FineSolution;
use crate::smoothing::{cutoff, eval_slow, eval_two_scale, EvalRoute, Mollifier};
use crate::{Error, Result};
use num_complex::Complex64 as C64;

/// Knobs of the corrector expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionOptions {
    /// The cut-off is `ψ_r` with `r = cutoff_multiple · ε`.
    pub cutoff_multiple: f64,
    pub route: EvalRoute,
    pub mollifier: Mollifier,
    /// Random test fields per weak-form check.
    pub test_fields: usize,
    /// The weak-form check integrates on a macro grid this many times finer, so
    /// that products with cell fields stay below its Nyquist frequency.
    pub check_oversampling: usize,
    pub seed: u64,
}

impl ExpansionOptions {
    pub fn new(dim: usize) -> Self {
        ExpansionOptions {
            cutoff_multiple: 2.0,
            route: EvalRoute::Auto,
            mollifier: Mollifier::standard(dim),
            test_fields: 3,
            check_oversampling: 2,
            seed: 0x7e57,
        }
    }
}

/// `out += s · a · b`.
fn axpy(out: &mut [f64], s: f64, a: &[f64], b: &[f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o += s * x * y;
    }
}

/// `φ`, its chain-rule gradient, and the pieces of `div φ` and of `H₃`, `H₄`.
#[derive(Clone, Debug)]
pub struct CorrectorField {
    /// `φ^β`.
    pub values: Vec<Vec<f64>>,
    /// `∂_h φ^β` at `β·n + h`, differentiating `y = x/ε`, `z = x/ε²` exactly.
    pub gradient: Vec<Vec<f64>>,
    /// `J₁ = ε div_y χ_j^{·α}(y,z) K_j^α`, `J₂ = div_z χ_j^{·α}(y,z) K_j^α`,
    /// `J₃ = ε² χ_j^{βα}(y,z) ∂_β K_j^α`.
    pub j_terms: [Vec<f64>; 3],
    pub(crate) r3: Vec<Vec<f64>>,
    pub(crate) r4: Vec<Vec<f64>>,
}

impl CorrectorField {
    pub fn divergence(&self) -> Vec<f64> {
        let n = self.values.len();
        let mut out = vec![0.0; self.values[0].len()];
        for b in 0..n {
            out.iter_mut().zip(&self.gradient[b * n + b]).for_each(|(o, v)| *o += v);
        }
        out
    }
}

/// Flux-corrector rewriting of `H₂`, family by family.
#[derive(Clone, Debug)]
pub struct FluxTerms {
    /// `H₂₁`, `H₂₂`, `H₂₃`, each `f_i^α` at `i·n + α`.
    pub h2: [Vec<Vec<f64>>; 3],
    /// The gradient potentials `ε²∂_i(q₁ G)`, `ε∂_i(q₂ G)`, `ε²∂_i(q₃ G)`.
    pub pressure: [Vec<f64>; 3],
    /// `T₁ … T₅` of the pressure rewriting.
    pub t: [Vec<f64>; 5],
}

/// Macroscopic data shared by every term: the smoothed gradient `G` and the
/// combinations `K = G − ∂_yχ(y)·G` that the second-order corrector multiplies.
pub struct ExpansionContext<'a> {
    pub cells: &'a CorrectorSet,
    pub domain: Domain,
    pub eps: f64,
    pub route: EvalRoute,
    /// `∂_h u₀^β` at `β·n + h`; empty in a refined check context.
    pub grad_u0: Vec<Vec<f64>>,
    /// `G_k^β = ψ S_ε(∂_k u₀^β)` at `k·n + β`.
    pub g: Vec<Vec<f64>>,
    /// `∂_h G_k^β` at `(k·n + β)·n + h`.
    pub dg: Vec<Vec<f64>>,
    /// `K_j^α = G_j^α − ∂_{y_j}χ_k^{αγ}(y) G_k^γ` at `j·n + α`.
    pub k: Vec<Vec<f64>>,
    /// `∂_h K_j^α` at `(j·n + α)·n + h`.
    pub dk: Vec<Vec<f64>>,
    /// `∂²_{y_h y_j}χ_k^{αγ}(y) G_k^γ`, laid out like `dk`.
    l: Vec<Vec<f64>>,
    /// `∂_{y_j}χ_k^{αγ}(y) ∂_h G_k^γ`, laid out like `dk`.
    m: Vec<Vec<f64>>,
}

impl<'a> ExpansionContext<'a> {
    pub fn new(cells: &'a CorrectorSet, eps: f64, u0: &FineSolution, opts: &ExpansionOptions) -> Result<Self> {
        let domain = u0.domain;
        let n = domain.dim();
        if n != cells.dim() || u0.velocity.len() != n {
            return Err(Error::GridMismatch);
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidInput("ε must lie in (0, 1]"));
        }
        let mut grad_u0 = vec![Vec::new(); n * n];
        for b in 0..n {
            for (h, d) in domain.gradient(&u0.velocity[b]).into_iter().enumerate() {
                grad_u0[b * n + h] = d;
            }
        }
        let cut = cutoff(&domain, opts.cutoff_multiple * eps, &opts.mollifier)?;
        let kernel = opts.mollifier.kernel(&domain, eps)?;
        let mut g = vec![Vec::new(); n * n];
        for k in 0..n {
            for b in 0..n {
                let mut s = kernel.apply(&domain, &grad_u0[b * n + k]);
                s.iter_mut().zip(&cut.values).for_each(|(v, p)| *v *= p);
                g[k * n + b] = s;
            }
        }
        Self::assemble(cells, eps, domain, opts.route, grad_u0, g)
    }

    fn assemble(
        cells: &'a CorrectorSet,
        eps: f64,
        domain: Domain,
        route: EvalRoute,
        grad_u0: Vec<Vec<f64>>,
        g: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = domain.dim();
        let len = domain.len();
        // `G` vanishes near ∂Ω, so it differentiates spectrally on either domain
        let lattice = Spectral::new(&domain.lattice().shape());
        let mut dg = vec![Vec::new(); n * n * n];
        for c in 0..n * n {
            for h in 0..n {
                dg[c * n + h] = lattice.derivative_real(&g[c], h);
            }
        }
        let mut ctx = ExpansionContext {
            cells,
            domain,
            eps,
            route,
            grad_u0,
            k: g.clone(),
            g,
            dk: vec![vec![0.0; len]; n * n * n],
            l: vec![vec![0.0; len]; n * n * n],
            m: vec![vec![0.0; len]; n * n * n],
            dg,
        };
        ctx.slow_contractions()?;
        Ok(ctx)
    }

    /// The same `G` carried to a grid `factor` times finer by trigonometric
    /// interpolation, with every derived field rebuilt there.
    pub fn refined(&self, factor: usize) -> Result<ExpansionContext<'a>> {
        let n = self.n();
        let p = self.domain.points() * factor;
        let fine = if self.domain.is_torus() { Domain::torus(n, p)? } else { Domain::square(p)? };
        let g = self.g.iter().map(|f| refine(&self.domain, &fine, f)).collect();
        Self::assemble(self.cells, self.eps, fine, self.route, Vec::new(), g)
    }

    /// `a_ih^{αβ}(x/ε, x/ε²)` at the nodes, indexed `t4(i, h, α, β)`.
    pub fn coefficient(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let len = self.domain.len();
        let mut out = vec![vec![0.0; len]; n.pow(4)];
        let (mut x, mut y, mut z) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut t = vec![0.0; n.pow(4)];
        for p in 0..len {
            self.domain.coord(p, &mut x);
            for d in 0..n {
                y[d] = x[d] / self.eps;
                z[d] = x[d] / (self.eps * self.eps);
            }
            self.cells.coefficient.spec.eval(&y, &z, &mut t);
            for (c, v) in t.iter().enumerate() {
                out[c][p] = *v;
            }
        }
        out
    }

    fn n(&self) -> usize {
        self.domain.dim()
    }

    fn zeros(&self, count: usize) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.domain.len()]; count]
    }

    /// A cell field on `Y` at `x/ε`.
    pub fn sample_slow(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; self.domain.len()]);
        }
        eval_slow(&self.domain, self.eps, self.cells.slow.grid, f, self.route)
    }

    /// A cell field on `Y × Z` at `(x/ε, x/ε²)`.
    pub fn sample_fast(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; self.domain.len()]);
        }
        eval_two_scale(&self.domain, self.eps, self.cells.grid(), f, self.route)
    }

    fn slow_contractions(&mut self) -> Result<()> {
        let n = self.n();
        let slow = &self.cells.slow;
        let sp = Spectral::new(&slow.grid.shape());
        let sg = slow_gradients(slow);
        for k in 0..n {
            for gm in 0..n {
                for a in 0..n {
                    let c = chi(n, k, gm, a);
                    for j in 0..n {
                        // ∂_{y_j} χ_k^{αγ}
                        let cell = &sg[c * n + j];
                        let m = self.sample_slow(cell)?;
                        let kj = j * n + a;
                        axpy(&mut self.k[kj], -1.0, &m, &self.g[k * n + gm]);
                        for h in 0..n {
                            axpy(&mut self.m[kj * n + h], 1.0, &m, &self.dg[(k * n + gm) * n + h]);
                        }
                        for h in 0..n {
                            let second = sp.derivative_real(cell, h);
                            let m2 = self.sample_slow(&second)?;
                            axpy(&mut self.l[kj * n + h], 1.0, &m2, &self.g[k * n + gm]);
                        }
                    }
                }
            }
        }
        let inv = 1.0 / self.eps;
        for c in 0..n * n * n {
            for p in 0..self.domain.len() {
                self.dk[c][p] = self.dg[c][p] - inv * self.l[c][p] - self.m[c][p];
            }
        }
        Ok(())
    }

    /// `φ^β = ε χ_j^{βγ}(y) G_j^γ + ε² χ_j^{βα}(y,z) K_j^α` with its gradient.
    pub fn corrector(&self) -> Result<CorrectorField> {
        let n = self.n();
        let eps = self.eps;
        let mut values = self.zeros(n);
        let mut gradient = self.zeros(n * n);
        let mut r3 = self.zeros(n * n);
        let mut r4 = self.zeros(n * n);
        let mut j_terms = [self.zeros(1).remove(0), self.zeros(1).remove(0), self.zeros(1).remove(0)];
        // ∂_{y_h}χ_j^{βγ}(y) G_j^γ = G_h^β − K_h^β
        for b in 0..n {
            for h in 0..n {
                let dst = &mut gradient[b * n + h];
                for p in 0..dst.len() {
                    dst[p] += self.g[h * n + b][p] - self.k[h * n + b][p];
                }
            }
        }
        let slow = &self.cells.slow;
        let fast = &self.cells.fast;
        let grid = self.cells.grid();
        for j in 0..n {
            for gm in 0..n {
                for b in 0..n {
                    let c = chi(n, j, gm, b);
                    let m = self.sample_slow(&slow.chi[c])?;
                    axpy(&mut values[b], eps, &m, &self.g[j * n + gm]);
                    for h in 0..n {
                        let dg = &self.dg[(j * n + gm) * n + h];
                        axpy(&mut gradient[b * n + h], eps, &m, dg);
                        axpy(&mut r3[b * n + h], 1.0, &m, dg);
                    }
                }
            }
        }
        for j in 0..n {
            for a in 0..n {
                let kj = j * n + a;
                for b in 0..n {
                    let cell = &fast.chi.components[chi(n, j, a, b)];
                    if cell.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    let m = self.sample_fast(cell)?;
                    axpy(&mut values[b], eps * eps, &m, &self.k[kj]);
                    axpy(&mut j_terms[2], eps * eps, &m, &self.dk[kj * n + b]);
                    for h in 0..n {
                        let idx = kj * n + h;
                        axpy(&mut gradient[b * n + h], eps * eps, &m, &self.dk[idx]);
                        axpy(&mut r3[b * n + h], -1.0, &m, &self.l[idx]);
                        let dst = &mut r4[b * n + h];
                        for p in 0..dst.len() {
                            dst[p] += m[p] * (self.dg[idx][p] - self.m[idx][p]);
                        }
                    }
                    for h in 0..n {
                        let dy = self.sample_fast(&y_derivative(grid, cell, h))?;
                        axpy(&mut gradient[b * n + h], eps, &dy, &self.k[kj]);
                        axpy(&mut r3[b * n + h], 1.0, &dy, &self.k[kj]);
                        let dz = self.sample_fast(&z_derivative(grid, cell, h))?;
                        axpy(&mut gradient[b * n + h], 1.0, &dz, &self.k[kj]);
                        if h == b {
                            axpy(&mut j_terms[0], eps, &dy, &self.k[kj]);
                            axpy(&mut j_terms[1], 1.0, &dz, &self.k[kj]);
                        }
                    }
                }
            }
        }
        Ok(CorrectorField { values, gradient, j_terms, r3, r4 })
    }

    /// `π_k^β(y,z) G_k^β + π_k^β(y) G_k^β − π_j^γ(y,z) ∂_{y_j}χ_k^{γβ}(y) G_k^β`,
    /// without the mean removed. The last two pieces combine into `π(y,z)·K`.
    pub fn pi_tilde(&self) -> Result<Vec<f64>> {
        let n = self.n();
        let mut out = vec![0.0; self.domain.len()];
        for k in 0..n {
            for b in 0..n {
                let c = pi(n, k, b);
                let s = self.sample_slow(&self.cells.slow.pi[c])?;
                axpy(&mut out, 1.0, &s, &self.g[k * n + b]);
                let f = self.sample_fast(&self.cells.fast.pi.components[c])?;
                axpy(&mut out, 1.0, &f, &self.k[k * n + b]);
            }
        }
        Ok(out)
    }

    /// `I_m G` for `m = 1, 2, 3`, each `f_i^α` at `i·n + α`. Their sum is `H₂`.
    pub fn discrepancy_terms(&self) -> Result<[Vec<Vec<f64>>; 3]> {
        let n = self.n();
        let mut out = [self.zeros(n * n), self.zeros(n * n), self.zeros(n * n)];
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let c = t4(n, i, j, a, b);
                        let g = &self.g[j * n + b];
                        let m1 = self.sample_fast(&self.cells.i1.components[c])?;
                        axpy(&mut out[0][i * n + a], 1.0, &m1, g);
                        let m2 = self.sample_slow(&self.cells.i2.fields[c])?;
                        axpy(&mut out[1][i * n + a], 1.0, &m2, g);
                        let m3 = self.sample_fast(&self.cells.i3.components[c])?;
                        axpy(&mut out[2][i * n + a], 1.0, &m3, g);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn flux_terms(&self) -> Result<FluxTerms> {
        let n = self.n();
        let eps = self.eps;
        let len = self.domain.len();
        let mut h2 = [self.zeros(n * n), self.zeros(n * n), self.zeros(n * n)];
        let mut pressure = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut t = [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        for (fam, set) in self.cells.flux.iter().enumerate() {
            let fast = set.grid_z.is_some();
            let sample = |f: &[f64]| if fast { self.sample_fast(f) } else { self.sample_slow(f) };
            let ff = flux_fields(set);
            // fast families carry ε² on the potentials, the slow one ε
            let c = if fast { eps * eps } else { eps };
            let h = &mut h2[fam];
            let p = &mut pressure[fam];
            if fast {
                for i in 0..n {
                    for j in 0..n {
                        for a in 0..n {
                            for b in 0..n {
                                let g = &self.g[j * n + b];
                                let de = sample(&ff.div_e[t4(n, i, j, a, b)])?;
                                axpy(&mut h[i * n + a], -eps, &de, g);
                                let dq = sample(&ff.grad_q[q3(n, i, j, b) * n + a])?;
                                axpy(&mut h[i * n + a], -eps, &dq, g);
                            }
                        }
                    }
                }
            }
            for k in 0..n {
                for i in (k + 1)..n {
                    for j in 0..n {
                        for a in 0..n {
                            for b in 0..n {
                                let e = sample(&set.e[e5(n, k, i, j, a, b)])?;
                                let base = (j * n + b) * n;
                                // E_{ikj} = −E_{kij}
                                axpy(&mut h[i * n + a], -c, &e, &self.dg[base + k]);
                                axpy(&mut h[k * n + a], c, &e, &self.dg[base + i]);
                            }
                        }
                    }
                }
            }
            let t_q = match fam {
                0 => 4,
                1 => 1,
                _ => 3,
            };
            for i in 0..n {
                for j in 0..n {
                    for b in 0..n {
                        let q = sample(&set.q[q3(n, i, j, b)])?;
                        let base = (j * n + b) * n;
                        for a in 0..n {
                            axpy(&mut h[i * n + a], -c, &q, &self.dg[base + a]);
                        }
                        axpy(p, c, &q, &self.dg[base + i]);
                        axpy(&mut t[t_q], c, &q, &self.dg[base + i]);
                    }
                }
            }
            for k in 0..n {
                for b in 0..n {
                    let g = &self.g[k * n + b];
                    let dq = sample(&ff.div_q_cell[k * n + b])?;
                    axpy(p, 1.0, &dq, g);
                    if fast {
                        let dy = sample(&ff.div_q_slow[k * n + b])?;
                        axpy(p, eps, &dy, g);
                        axpy(&mut t[if fam == 0 { 0 } else { 2 }], eps, &dy, g);
                    }
                }
            }
        }
        Ok(FluxTerms { h2, pressure, t })
    }

    /// `H₁ = (â − a)(∇u₀ − G)`, `H₃ = ε a R₃`, `H₄ = ε² a R₄`.
    pub fn local_residuals(&self, corr: &CorrectorField) -> [Vec<Vec<f64>>; 3] {
        let n = self.n();
        let a_hat = &self.cells.effective.a_hat;
        let mut out = [self.zeros(n * n), self.zeros(n * n), self.zeros(n * n)];
        let coefficient = self.coefficient();
        let (e, e2) = (self.eps, self.eps * self.eps);
        for i in 0..n {
            for a in 0..n {
                for h in 0..n {
                    for b in 0..n {
                        let c = t4(n, i, h, a, b);
                        let coef = &coefficient[c];
                        let gu = &self.grad_u0[b * n + h];
                        let g = &self.g[h * n + b];
                        let r3 = &corr.r3[b * n + h];
                        let r4 = &corr.r4[b * n + h];
                        let [h1, h3, h4] = &mut out;
                        let dst = i * n + a;
                        for p in 0..coef.len() {
                            h1[dst][p] += (a_hat[c] - coef[p]) * (gu[p] - g[p]);
                            h3[dst][p] += e * coef[p] * r3[p];
                            h4[dst][p] += e2 * coef[p] * r4[p];
                        }
                    }
                }
            }
        }
        out
    }

    /// `(â − a)∇u₀ + a∇φ`, which equals `H₁ + H₂ + H₃ + H₄`.
    pub fn flux_of_corrector(&self, corr: &CorrectorField) -> Vec<Vec<f64>> {
        let n = self.n();
        let a_hat = &self.cells.effective.a_hat;
        let mut out = self.zeros(n * n);
        let coefficient = self.coefficient();
        for i in 0..n {
            for a in 0..n {
                for h in 0..n {
                    for b in 0..n {
                        let c = t4(n, i, h, a, b);
                        let coef = &coefficient[c];
                        let gu = &self.grad_u0[b * n + h];
                        let dphi = &corr.gradient[b * n + h];
                        let dst = &mut out[i * n + a];
                        for p in 0..coef.len() {
                            dst[p] += (a_hat[c] - coef[p]) * gu[p] + coef[p] * dphi[p];
                        }
                    }
                }
            }
        }
        out
    }
}

/// Trigonometric interpolation of a periodic (or compactly supported) field
/// from the nodes of `coarse` to those of `fine`, node offsets included.
fn refine(coarse: &Domain, fine: &Domain, f: &[f64]) -> Vec<f64> {
    let n = coarse.dim();
    let (nc, nf) = (coarse.points(), fine.points());
    let sc = Spectral::new(&coarse.lattice().shape());
    let sf = Spectral::new(&fine.lattice().shape());
    let spec = sc.forward(f);
    // shift between the two node sets, in unit-period coordinates
    let shift = coarse.offset() * (1.0 / nf as f64 - 1.0 / nc as f64);
    let mut out = vec![C64::new(0.0, 0.0); sf.len()];
    let mut targets: Vec<(usize, f64)> = Vec::new();
    for (m, c) in spec.iter().enumerate() {
        // a Nyquist wave splits evenly between +N/2 and −N/2
        targets.clear();
        targets.push((0, 0.0));
        let mut weight = 1.0;
        for d in 0..n {
            let w = sc.wave(m, d) as i64;
            let options: &[i64] = if 2 * w.unsigned_abs() as usize == nc { &[w, -w] } else { &[w] };
            if options.len() == 2 {
                weight *= 0.5;
            }
            let mut next = Vec::with_capacity(targets.len() * options.len());
            for &(idx, phase) in &targets {
                for &k in options {
                    let fi = k.rem_euclid(nf as i64) as usize;
                    next.push((idx * nf + fi, phase + 2.0 * core::f64::consts::PI * k as f64 * shift));
                }
            }
            targets = next;
        }
        for &(idx, phase) in &targets {
            out[idx] += c * C64::from_polar(weight, phase);
        }
    }
    sf.inverse(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn refinement_reproduces_trigonometric_polynomials() {
        for coarse in [Domain::torus(2, 16).unwrap(), Domain::square(16).unwrap()] {
            let fine = if coarse.is_torus() { Domain::torus(2, 64).unwrap() } else { Domain::square(64).unwrap() };
            let f =
                |x: &[f64]| libm::cos(2.0 * PI * (3.0 * x[0] - x[1]) + 0.3) + 0.5 * libm::sin(2.0 * PI * 7.0 * x[1]);
            let vals: Vec<f64> = (0..coarse.len()).map(|p| f(&coarse.coords(p))).collect();
            let r = refine(&coarse, &fine, &vals);
            for p in 0..fine.len() {
                assert!((r[p] - f(&fine.coords(p))).abs() < 1e-12, "{p}");
            }
        }
    }
}
