//! The averaged coefficient `a₂(y)` and the correctors of the slow variable.

use alloc::vec;
use alloc::vec::Vec;

use super::fast::FastCorrectorFamily;
use super::stokes::{Forcing, SolveReport, SolverOptions, StokesOperator};
use crate::fields::index::{chi, pi, t4};
use crate::fields::{pairwise_sum, EllipticityReport, PeriodicGrid, Spectral, Tensor4Field, TwoScaleCoefficient};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct MesoscaleCoefficient {
    pub a2: Tensor4Field,
    pub report: EllipticityReport,
    pub mu: f64,
}

impl MesoscaleCoefficient {
    pub fn grid(&self) -> PeriodicGrid {
        self.a2.grid
    }
}

/// `∂_{z_k} χ_j^{γβ}` at one `y` node, `n⁴` fields indexed `chi(j,β,γ)·n + k`.
pub fn fast_gradients(fast: &FastCorrectorFamily, sp: &Spectral, y: usize) -> Vec<Vec<f64>> {
    let n = fast.dim();
    let mut out = Vec::with_capacity(n.pow(4));
    for c in 0..n * n * n {
        let s = sp.forward(fast.chi.slice(c, y));
        for k in 0..n {
            let mut d = s.clone();
            sp.derivative(&s, k, &mut d);
            out.push(sp.inverse(&d));
        }
    }
    out
}

/// `a₂(y_index) = ⨍_Z (a_ij^{αβ} − a_ik^{αγ} ∂_{z_k} χ_j^{γβ})`.
pub fn mesoscale_at(a: &TwoScaleCoefficient, fast: &FastCorrectorFamily, sp: &Spectral, y: usize) -> Vec<f64> {
    let n = a.dim();
    let nz = a.grid.z.len();
    let grads = fast_gradients(fast, sp, y);
    let mut out = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for al in 0..n {
                for b in 0..n {
                    let mut s = pairwise_sum(a.samples.slice(t4(n, i, j, al, b), y));
                    for k in 0..n {
                        for g in 0..n {
                            let coef = a.samples.slice(t4(n, i, k, al, g), y);
                            let d = &grads[chi(n, j, b, g) * n + k];
                            s -= coef.iter().zip(d).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                    out[t4(n, i, j, al, b)] = s / nz as f64;
                }
            }
        }
    }
    out
}

/// Build `a₂` from precomputed per-node tensors and certify ellipticity.
pub fn assemble_mesoscale_with(
    gy: PeriodicGrid,
    tensors: Vec<Vec<f64>>,
    mu: f64,
    seed: u64,
) -> Result<MesoscaleCoefficient> {
    let n = gy.dim();
    let nc = n.pow(4);
    if tensors.len() != gy.len() {
        return Err(Error::GridMismatch);
    }
    let mut a2 = Tensor4Field::zeros(gy);
    for (p, t) in tensors.iter().enumerate() {
        for c in 0..nc {
            a2.components[c][p] = t[c];
        }
    }
    let report = EllipticityReport::build(gy.len(), n, |p, out| a2.at(p, out), 10_000, seed);
    report.check(mu)?;
    Ok(MesoscaleCoefficient { a2, report, mu })
}

pub fn assemble_mesoscale(a: &TwoScaleCoefficient, fast: &FastCorrectorFamily) -> Result<MesoscaleCoefficient> {
    if fast.grid != a.grid {
        return Err(Error::GridMismatch);
    }
    let sp = Spectral::new(&a.grid.z.shape());
    let tensors = (0..a.grid.y.len()).map(|y| mesoscale_at(a, fast, &sp, y)).collect();
    assemble_mesoscale_with(a.grid.y, tensors, a.spec.mu(), 0x5eed)
}

#[derive(Clone, Debug)]
pub struct SlowCorrectorFamily {
    pub grid: PeriodicGrid,
    /// `n³` fields on `Y`, indexed by [`chi`].
    pub chi: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
    pub reports: Vec<SolveReport>,
}

/// Solve `A₂(χ_k^β − P_k^β) + ∇_y π_k^β = 0` on `Y`.
pub fn solve_slow_cell(a2: &MesoscaleCoefficient, opts: SolverOptions) -> Result<SlowCorrectorFamily> {
    let grid = a2.grid();
    let n = grid.dim();
    let len = grid.len();
    let coeff = &a2.a2;
    let mut out = SlowCorrectorFamily {
        grid,
        chi: vec![vec![0.0; len]; n * n * n],
        pi: vec![vec![0.0; len]; n * n],
        reports: vec![SolveReport::default(); n * n],
    };
    if coeff.components.iter().all(|c| c.iter().all(|&v| v == c[0])) {
        return Ok(out);
    }
    let op = StokesOperator::new(coeff, opts)?;
    let mut r = vec![vec![0.0; len]; n * n];
    for k in 0..n {
        for b in 0..n {
            for i in 0..n {
                for al in 0..n {
                    r[i * n + al].copy_from_slice(&coeff.components[t4(n, i, k, al, b)]);
                }
            }
            let sol = op.solve(Forcing::Divergence(&r), None)?;
            for g in 0..n {
                out.chi[chi(n, k, b, g)] = sol.velocity[g].clone();
            }
            out.pi[pi(n, k, b)] = sol.pressure;
            out.reports[pi(n, k, b)] = sol.report;
        }
    }
    Ok(out)
}
