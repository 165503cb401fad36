use alloc::vec;
use alloc::vec::Vec;

use crate::cellsolve::{
    assemble_mesoscale, solve_fast_family, solve_slow_cell, FastCorrectorFamily, MesoscaleCoefficient,
    SlowCorrectorFamily, SolverOptions,
};
use crate::effective::{
    assemble_effective, build_flux_correctors, build_two_scale_flux, compute_i1, compute_i2, compute_i3,
    EffectiveTensor, FluxCorrectorSet, FluxFamily, SlowDiscrepancy,
};
use crate::fields::index::{e5, q3, t4};
use crate::fields::{CoefficientSpec, PeriodicGrid, Spectral, TwoScaleCoefficient, TwoScaleField, TwoScaleGrid};
use crate::Result;

/// Everything cell-level the expansion consumes, built once per coefficient.
#[derive(Clone, Debug)]
pub struct CorrectorSet {
    pub coefficient: TwoScaleCoefficient,
    pub fast: FastCorrectorFamily,
    pub mesoscale: MesoscaleCoefficient,
    pub slow: SlowCorrectorFamily,
    pub effective: EffectiveTensor,
    pub i1: TwoScaleField,
    pub i2: SlowDiscrepancy,
    pub i3: TwoScaleField,
    /// Flux correctors of `I₁`, `I₂`, `I₃`, in that order.
    pub flux: [FluxCorrectorSet; 3],
}

impl CorrectorSet {
    pub fn build(spec: &CoefficientSpec, gy: PeriodicGrid, gz: PeriodicGrid, opts: SolverOptions) -> Result<Self> {
        Self::build_seeded(spec, gy, gz, opts, 0x5eed)
    }

    /// As [`CorrectorSet::build`], with `seed` driving the random `ξ` of both ellipticity certificates.
    pub fn build_seeded(
        spec: &CoefficientSpec,
        gy: PeriodicGrid,
        gz: PeriodicGrid,
        opts: SolverOptions,
        seed: u64,
    ) -> Result<Self> {
        let coefficient = TwoScaleCoefficient::sample_seeded(spec, gy, gz, seed)?;
        let fast = solve_fast_family(&coefficient, opts)?;
        let mesoscale = assemble_mesoscale(&coefficient, &fast)?;
        let slow = solve_slow_cell(&mesoscale, opts)?;
        let effective = assemble_effective(&coefficient, &fast, &slow)?;
        let effective = EffectiveTensor::new(effective.dim, effective.a_hat, spec.mu(), seed)?;
        let i1 = compute_i1(&coefficient, &fast)?;
        let i2 = compute_i2(&effective.a_hat, &mesoscale, &slow)?;
        let i3 = compute_i3(&coefficient, &fast, &slow)?;
        let flux = [
            build_two_scale_flux(FluxFamily::First, &i1)?,
            build_flux_correctors(i2.grid, &i2.fields)?,
            build_two_scale_flux(FluxFamily::Third, &i3)?,
        ];
        Ok(CorrectorSet { coefficient, fast, mesoscale, slow, effective, i1, i2, i3, flux })
    }

    pub fn dim(&self) -> usize {
        self.coefficient.dim()
    }

    pub fn grid(&self) -> TwoScaleGrid {
        self.coefficient.grid
    }

    /// Nothing oscillates: every corrector vanishes identically.
    pub fn is_trivial(&self) -> bool {
        let zero = |f: &[Vec<f64>]| f.iter().flatten().all(|&v| v == 0.0);
        zero(&self.fast.chi.components) && zero(&self.slow.chi)
    }
}

/// `∂_{z_axis}` of every `Z` slice of a two-scale field.
pub(crate) fn z_derivative(grid: TwoScaleGrid, f: &[f64], axis: usize) -> Vec<f64> {
    let sp = Spectral::new(&grid.z.shape());
    let nz = grid.z.len();
    let mut out = vec![0.0; f.len()];
    for y in 0..grid.y.len() {
        let d = sp.derivative_real(&f[y * nz..(y + 1) * nz], axis);
        out[y * nz..(y + 1) * nz].copy_from_slice(&d);
    }
    out
}

/// `∂_{y_axis}` of a two-scale field, one `Y` column per `z` node.
pub(crate) fn y_derivative(grid: TwoScaleGrid, f: &[f64], axis: usize) -> Vec<f64> {
    let sp = Spectral::new(&grid.y.shape());
    let (ny, nz) = (grid.y.len(), grid.z.len());
    let mut out = vec![0.0; f.len()];
    let mut col = vec![0.0; ny];
    for z in 0..nz {
        for y in 0..ny {
            col[y] = f[y * nz + z];
        }
        let d = sp.derivative_real(&col, axis);
        for y in 0..ny {
            out[y * nz + z] = d[y];
        }
    }
    out
}

/// The cell fields of one flux family that the residual terms need.
pub(crate) struct FluxFields {
    /// `∂_{y_k} E_{kij}^{αβ}` summed over `k`, indexed by `t4(i, j, α, β)`.
    pub div_e: Vec<Vec<f64>>,
    /// `∂_{y_α} q_{ij}^β`, indexed `q3(i, j, β)·n + α`.
    pub grad_q: Vec<Vec<f64>>,
    /// `∂_{z_i} q_{ik}^β` (fast families) or `∂_{y_i} q_{ik}^β` (slow family), indexed `k·n + β`.
    pub div_q_cell: Vec<Vec<f64>>,
    /// `∂_{y_i} q_{ik}^β` for the fast families, indexed `k·n + β`.
    pub div_q_slow: Vec<Vec<f64>>,
}

pub(crate) fn flux_fields(set: &FluxCorrectorSet) -> FluxFields {
    let n = set.dim();
    let div_q_cell = set.pressure_divergence();
    let Some(gz) = set.grid_z else {
        return FluxFields { div_e: Vec::new(), grad_q: Vec::new(), div_q_cell, div_q_slow: Vec::new() };
    };
    let grid = TwoScaleGrid { y: set.grid_y, z: gz };
    let len = grid.len();
    let mut div_e = vec![vec![0.0; len]; n.pow(4)];
    for k in 0..n {
        for i in 0..n {
            if i == k {
                continue;
            }
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let d = y_derivative(grid, &set.e[e5(n, k, i, j, a, b)], k);
                        div_e[t4(n, i, j, a, b)].iter_mut().zip(&d).for_each(|(o, v)| *o += v);
                    }
                }
            }
        }
    }
    let mut grad_q = vec![Vec::new(); n.pow(4)];
    let mut div_q_slow = vec![vec![0.0; len]; n * n];
    for i in 0..n {
        for j in 0..n {
            for b in 0..n {
                for a in 0..n {
                    let d = y_derivative(grid, &set.q[q3(n, i, j, b)], a);
                    if a == i {
                        div_q_slow[j * n + b].iter_mut().zip(&d).for_each(|(o, v)| *o += v);
                    }
                    grad_q[q3(n, i, j, b) * n + a] = d;
                }
            }
        }
    }
    FluxFields { div_e, grad_q, div_q_cell, div_q_slow }
}
