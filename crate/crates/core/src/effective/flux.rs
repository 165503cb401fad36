//! Flux correctors: skew potentials `E_{kij}^{αβ}` and pressure potentials
//! `q_{ij}^β` with `I_ij^{αβ} = ∂_k E_{kij}^{αβ} + ∂_α q_{ij}^β`.
//!
//! Per mode, with `k = 2πκ`, the auxiliary solve gives
//! `f̂ = −(Î − k(k·Î)/|k|²)/|k|²`, `q̂ = −i k·Î/|k|²`, and then
//! `Ê_{kij} = i k_k f̂_{ij} − i k_i f̂_{kj}`. The same `+∂_α q` convention is
//! used for all three families.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::cellsolve::aux_spectra;
use crate::fields::index::{e5, q3, t4};
use crate::fields::{PeriodicGrid, Spectral, TwoScaleField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxFamily {
    /// Built from `I₁(y, z)`, oscillating in `z`.
    First,
    /// Built from `I₂(y)`, oscillating in `y`.
    Second,
    /// Built from `I₃(y, z)`, oscillating in `z`.
    Third,
}

/// `E` (`n⁵` fields) and `q` (`n³` fields) on one periodic cell.
#[derive(Clone, Debug)]
pub struct CellFlux {
    pub e: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// Content of `I` on modes the discrete derivatives cannot reach.
    pub unresolved: f64,
}

/// Flux correctors for a whole family.
#[derive(Clone, Debug)]
pub struct FluxCorrectorSet {
    pub family: FluxFamily,
    pub grid_y: PeriodicGrid,
    /// `Some` for the families living on `Y × Z` (node index `y·|Z| + z`).
    pub grid_z: Option<PeriodicGrid>,
    pub e: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub unresolved: f64,
}

/// Build `(E, q)` on one cell from `n⁴` mean-zero fields `I_ij^{αβ}`.
pub fn flux_on_cell(sp: &Spectral, data: &[Vec<f64>]) -> Result<CellFlux> {
    flux_on_cell_scaled(sp, data, 0.0)
}

/// RMS size of a multi-component field, the `‖I‖` of the mean check.
fn rms(data: &[Vec<f64>]) -> f64 {
    libm::sqrt(data.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64).sum::<f64>())
}

/// As [`flux_on_cell`], with the mean measured against `max(‖I‖, reference)`.
fn flux_on_cell_scaled(sp: &Spectral, data: &[Vec<f64>], reference: f64) -> Result<CellFlux> {
    let n = sp.dim();
    let len = sp.len();
    if data.len() != n.pow(4) {
        return Err(Error::GridMismatch);
    }
    let refs: Vec<&[f64]> = data.iter().map(|c| c.as_slice()).collect();
    let spec = sp.forward_many(&refs);
    let scale = libm::sqrt(spec.iter().map(|s| Spectral::energy(s)).sum::<f64>()).max(reference);
    let mean = libm::sqrt(spec.iter().map(|s| s[0].norm_sqr()).sum::<f64>());
    if mean > 1e-10 * scale {
        return Err(Error::NonZeroMean { mean, scale });
    }
    let zero = C64::new(0.0, 0.0);
    // f̂_{ij}^{αβ} stored at t4(i, j, α, β)
    let mut fh = vec![Vec::new(); n.pow(4)];
    let mut qh = vec![Vec::new(); n.pow(3)];
    let mut unresolved = 0.0;
    for i in 0..n {
        for j in 0..n {
            for b in 0..n {
                let vecs: Vec<Vec<C64>> = (0..n).map(|a| spec[t4(n, i, j, a, b)].clone()).collect();
                let (f, q, u) = aux_spectra(sp, &vecs, 0..n);
                unresolved += u * u;
                for (a, fa) in f.into_iter().enumerate() {
                    fh[t4(n, i, j, a, b)] = fa;
                }
                qh[q3(n, i, j, b)] = q;
            }
        }
    }
    let mut eh: Vec<(usize, Vec<C64>)> = Vec::new();
    for k in 0..n {
        for i in (k + 1)..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let fij = &fh[t4(n, i, j, a, b)];
                        let fkj = &fh[t4(n, k, j, a, b)];
                        let mut e = vec![zero; len];
                        for m in 0..len {
                            e[m] = C64::new(0.0, sp.dk(m, k)) * fij[m] - C64::new(0.0, sp.dk(m, i)) * fkj[m];
                        }
                        eh.push((e5(n, k, i, j, a, b), e));
                    }
                }
            }
        }
    }
    let erefs: Vec<&[C64]> = eh.iter().map(|(_, e)| e.as_slice()).collect();
    let ereal = sp.inverse_many(&erefs);
    let mut e = vec![vec![0.0; len]; n.pow(5)];
    for ((idx, _), field) in eh.iter().zip(ereal) {
        let mut f = *idx;
        let b = f % n;
        f /= n;
        let a = f % n;
        f /= n;
        let j = f % n;
        f /= n;
        let i = f % n;
        let k = f / n;
        e[e5(n, i, k, j, a, b)] = field.iter().map(|v| -v).collect();
        e[*idx] = field;
    }
    let qrefs: Vec<&[C64]> = qh.iter().map(|q| q.as_slice()).collect();
    let q = sp.inverse_many(&qrefs);
    Ok(CellFlux { e, q, unresolved: libm::sqrt(unresolved) })
}

/// Flux correctors for a two-scale family, one `Z` cell per `y` node.
pub fn build_two_scale_flux(family: FluxFamily, data: &TwoScaleField) -> Result<FluxCorrectorSet> {
    let grid = data.grid;
    let n = grid.dim();
    let sp = Spectral::new(&grid.z.shape());
    let total = grid.len();
    let mut e = vec![vec![0.0; total]; n.pow(5)];
    let mut q = vec![vec![0.0; total]; n.pow(3)];
    let mut unresolved = 0.0f64;
    let nz = grid.z.len();
    // a slice that is pure round-off is judged against the whole family
    let reference = rms(&data.components);
    for y in 0..grid.y.len() {
        let slices: Vec<Vec<f64>> = (0..n.pow(4)).map(|c| data.slice(c, y).to_vec()).collect();
        let cell = flux_on_cell_scaled(&sp, &slices, reference)?;
        for (dst, src) in e.iter_mut().zip(&cell.e) {
            dst[y * nz..(y + 1) * nz].copy_from_slice(src);
        }
        for (dst, src) in q.iter_mut().zip(&cell.q) {
            dst[y * nz..(y + 1) * nz].copy_from_slice(src);
        }
        unresolved = unresolved.max(cell.unresolved);
    }
    Ok(FluxCorrectorSet { family, grid_y: grid.y, grid_z: Some(grid.z), e, q, unresolved })
}

/// Flux correctors of fields on a single grid (the slow family, or any cell datum).
pub fn build_flux_correctors(grid: PeriodicGrid, data: &[Vec<f64>]) -> Result<FluxCorrectorSet> {
    let sp = Spectral::new(&grid.shape());
    let cell = flux_on_cell(&sp, data)?;
    Ok(FluxCorrectorSet {
        family: FluxFamily::Second,
        grid_y: grid,
        grid_z: None,
        e: cell.e,
        q: cell.q,
        unresolved: cell.unresolved,
    })
}

impl FluxCorrectorSet {
    pub fn dim(&self) -> usize {
        self.grid_y.dim()
    }

    fn cell_grid(&self) -> PeriodicGrid {
        self.grid_z.unwrap_or(self.grid_y)
    }

    fn cells(&self) -> usize {
        if self.grid_z.is_some() {
            self.grid_y.len()
        } else {
            1
        }
    }

    fn cell_slice<'a>(&self, field: &'a [f64], cell: usize) -> &'a [f64] {
        let l = self.cell_grid().len();
        &field[cell * l..(cell + 1) * l]
    }

    /// `max |E_kij + E_ikj| / max |E|`.
    pub fn skew_defect(&self) -> f64 {
        let n = self.dim();
        let scale = self.e.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            let u = &self.e[e5(n, k, i, j, a, b)];
                            let v = &self.e[e5(n, i, k, j, a, b)];
                            for (x, y) in u.iter().zip(v) {
                                worst = worst.max((x + y).abs());
                            }
                        }
                    }
                }
            }
        }
        worst / scale
    }

    /// `‖∂_k E_kij + ∂_α q_ij − I_ij‖ / ‖I‖` over all cells, `data` laid out like `e`.
    pub fn divergence_residual(&self, data: &[Vec<f64>]) -> f64 {
        let n = self.dim();
        let sp = Spectral::new(&self.cell_grid().shape());
        let (mut num, mut den) = (0.0, 0.0);
        for cell in 0..self.cells() {
            let mut acc: Vec<Vec<f64>> =
                (0..n.pow(4)).map(|c| self.cell_slice(&data[c], cell).iter().map(|v| -v).collect()).collect();
            for c in 0..n.pow(4) {
                den += self.cell_slice(&data[c], cell).iter().map(|v| v * v).sum::<f64>();
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        for a in 0..n {
                            for b in 0..n {
                                let d = sp.derivative_real(self.cell_slice(&self.e[e5(n, k, i, j, a, b)], cell), k);
                                let o = &mut acc[t4(n, i, j, a, b)];
                                o.iter_mut().zip(&d).for_each(|(x, y)| *x += y);
                            }
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    for b in 0..n {
                        let qs = sp.forward(self.cell_slice(&self.q[q3(n, i, j, b)], cell));
                        let mut d = qs.clone();
                        for a in 0..n {
                            sp.derivative(&qs, a, &mut d);
                            let dr = sp.inverse(&d);
                            let o = &mut acc[t4(n, i, j, a, b)];
                            o.iter_mut().zip(&dr).for_each(|(x, y)| *x += y);
                        }
                    }
                }
            }
            num += acc.iter().flatten().map(|v| v * v).sum::<f64>();
        }
        if den == 0.0 {
            return libm::sqrt(num);
        }
        libm::sqrt(num / den)
    }

    /// `∂_i q_{ik}^α` as `n²` fields indexed `k·n + α`, laid out like `q`.
    pub fn pressure_divergence(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let sp = Spectral::new(&self.cell_grid().shape());
        let total = self.q[0].len();
        let l = self.cell_grid().len();
        let mut out = vec![vec![0.0; total]; n * n];
        for cell in 0..self.cells() {
            for k in 0..n {
                for a in 0..n {
                    let dst = &mut out[k * n + a][cell * l..(cell + 1) * l];
                    for i in 0..n {
                        let d = sp.derivative_real(self.cell_slice(&self.q[q3(n, i, k, a)], cell), i);
                        dst.iter_mut().zip(&d).for_each(|(x, y)| *x += y);
                    }
                }
            }
        }
        out
    }
}

/// Relative `L²` distance between two multi-component fields.
pub fn relative_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let num: f64 = a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q))).sum();
    let den: f64 = b.iter().flatten().map(|v| v * v).sum();
    if den == 0.0 {
        libm::sqrt(num)
    } else {
        libm::sqrt(num / den)
    }
}
