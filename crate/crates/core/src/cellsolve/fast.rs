//! Correctors in the fast variable `z`, one periodic cell problem per `y` node.

use alloc::vec;
use alloc::vec::Vec;

use super::stokes::{Forcing, SolveReport, SolverOptions, StokesOperator};
use crate::fields::index::{chi, pi, t4};
use crate::fields::{TwoScaleCoefficient, TwoScaleField, TwoScaleGrid};
use crate::{Error, Result};

/// Correctors `χ_k^β(y_i, ·)`, `π_k^β(y_i, ·)` for one `y` node.
#[derive(Clone, Debug)]
pub struct FastCellSlice {
    pub y_index: usize,
    /// `n³` fields on `Z`, indexed by [`chi`].
    pub chi: Vec<Vec<f64>>,
    /// `n²` fields on `Z`, indexed by [`pi`].
    pub pi: Vec<Vec<f64>>,
    /// One report per `(k, β)`, in `pi` order.
    pub reports: Vec<SolveReport>,
}

/// All fast correctors as functions on `Y × Z`.
#[derive(Clone, Debug)]
pub struct FastCorrectorFamily {
    pub grid: TwoScaleGrid,
    pub chi: TwoScaleField,
    pub pi: TwoScaleField,
    pub reports: Vec<SolveReport>,
}

/// Solve `A₁(χ_k^β − P_k^β) + ∇_z π_k^β = 0` at `y = y_index`.
///
/// The forcing is `−div_z(A(y,·)∇_z P_k^β)`, i.e. divergence form with
/// `R_i^α = a_ik^{αβ}`.
pub fn solve_fast_cell(a: &TwoScaleCoefficient, y_index: usize, opts: SolverOptions) -> Result<FastCellSlice> {
    let n = a.dim();
    if y_index >= a.grid.y.len() {
        return Err(Error::InvalidInput("y index out of range"));
    }
    let nz = a.grid.z.len();
    let coeff = a.fast_slice(y_index);
    let mut out = FastCellSlice {
        y_index,
        chi: vec![vec![0.0; nz]; n * n * n],
        pi: vec![vec![0.0; nz]; n * n],
        reports: vec![SolveReport::default(); n * n],
    };
    let constant = coeff.components.iter().all(|c| c.iter().all(|&v| v == c[0]));
    if constant {
        // P_k^β already solves the homogeneous problem
        return Ok(out);
    }
    let op = StokesOperator::new(&coeff, opts)?;
    let mut r = vec![vec![0.0; nz]; n * n];
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

impl FastCorrectorFamily {
    /// Gather per-node slices (any order) into a family.
    pub fn from_slices(grid: TwoScaleGrid, slices: Vec<FastCellSlice>) -> Result<Self> {
        let n = grid.dim();
        if slices.len() != grid.y.len() {
            return Err(Error::GridMismatch);
        }
        let mut chi_f = TwoScaleField::zeros(grid, n * n * n);
        let mut pi_f = TwoScaleField::zeros(grid, n * n);
        let mut reports = vec![SolveReport::default(); grid.y.len() * n * n];
        for s in slices {
            let y = s.y_index;
            for (c, f) in s.chi.iter().enumerate() {
                chi_f.slice_mut(c, y).copy_from_slice(f);
            }
            for (c, f) in s.pi.iter().enumerate() {
                pi_f.slice_mut(c, y).copy_from_slice(f);
            }
            reports[y * n * n..(y + 1) * n * n].copy_from_slice(&s.reports);
        }
        Ok(FastCorrectorFamily { grid, chi: chi_f, pi: pi_f, reports })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn max_iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).max().unwrap_or(0)
    }

    pub fn max_residual(&self) -> f64 {
        self.reports.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

/// Serial sweep over all `y` nodes.
pub fn solve_fast_family(a: &TwoScaleCoefficient, opts: SolverOptions) -> Result<FastCorrectorFamily> {
    let slices = (0..a.grid.y.len()).map(|y| solve_fast_cell(a, y, opts)).collect::<Result<Vec<_>>>()?;
    FastCorrectorFamily::from_slices(a.grid, slices)
}
