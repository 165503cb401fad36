//! The three discrepancy tensors whose flux correctors carry the residual.
//!
//! With `B = a − a∂_zχ(y,z)` (the integrand of `a₂`) and `c = ∂_yχ(y)`:
//! `I₁ = a₂ − B`, `I₂ = â − a₂ + a₂·c`, and `I₃ = B·c − ⨍_Z B·c = −I₁·c`.

use alloc::vec;
use alloc::vec::Vec;

use crate::cellsolve::{fast_gradients, FastCorrectorFamily, MesoscaleCoefficient, SlowCorrectorFamily};
use crate::fields::index::{chi, t4};
use crate::fields::{mean, PeriodicGrid, Spectral, TwoScaleCoefficient, TwoScaleField};
use crate::{Error, Result};

/// `B_ij^{αβ}(y,·) = a_ij^{αβ} − a_ik^{αγ} ∂_{z_k} χ_j^{γβ}` on `Z` at one `y` node.
pub fn cell_flux(a: &TwoScaleCoefficient, fast: &FastCorrectorFamily, sp: &Spectral, y: usize) -> Vec<Vec<f64>> {
    let n = a.dim();
    let nz = a.grid.z.len();
    let grads = fast_gradients(fast, sp, y);
    let mut out = vec![vec![0.0; nz]; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for al in 0..n {
                for b in 0..n {
                    let o = &mut out[t4(n, i, j, al, b)];
                    o.copy_from_slice(a.samples.slice(t4(n, i, j, al, b), y));
                    for k in 0..n {
                        for g in 0..n {
                            let coef = a.samples.slice(t4(n, i, k, al, g), y);
                            let d = &grads[chi(n, j, b, g) * n + k];
                            for p in 0..nz {
                                o[p] -= coef[p] * d[p];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// `c_kj^{γβ} = ∂_{y_k} χ_j^{γβ}(y)`, `n⁴` fields on `Y` indexed `chi(j,β,γ)·n + k`.
pub fn slow_gradients(slow: &SlowCorrectorFamily) -> Vec<Vec<f64>> {
    let n = slow.grid.dim();
    let sp = Spectral::new(&slow.grid.shape());
    let mut out = Vec::with_capacity(n.pow(4));
    for c in 0..n * n * n {
        let s = sp.forward(&slow.chi[c]);
        let mut d = s.clone();
        for k in 0..n {
            sp.derivative(&s, k, &mut d);
            out.push(sp.inverse(&d));
        }
    }
    out
}

/// Contract `T_il^{αγ} c_lj^{γβ}` for one node; `t` and `out` are `n⁴`.
pub fn contract_with_gradient(n: usize, t: &[f64], c: &[f64], out: &mut [f64]) {
    for i in 0..n {
        for j in 0..n {
            for al in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        for g in 0..n {
                            s += t[t4(n, i, l, al, g)] * c[chi(n, j, b, g) * n + l];
                        }
                    }
                    out[t4(n, i, j, al, b)] = s;
                }
            }
        }
    }
}

fn norm_scale(a: &TwoScaleCoefficient) -> f64 {
    a.samples.max_abs()
}

fn check_zero_mean(field: &[f64], scale: f64) -> Result<()> {
    let m = mean(field);
    if m.abs() > 1e-9 * scale {
        return Err(Error::MeanNotZero { mean: m, scale });
    }
    Ok(())
}

/// `I₁` at one `y` node (Z-fields). The Z-average is checked to vanish.
pub fn i1_at(a: &TwoScaleCoefficient, fast: &FastCorrectorFamily, sp: &Spectral, y: usize) -> Result<Vec<Vec<f64>>> {
    let mut b = cell_flux(a, fast, sp, y);
    let scale = norm_scale(a);
    for f in b.iter_mut() {
        let m = mean(f);
        f.iter_mut().for_each(|v| *v = m - *v);
        check_zero_mean(f, scale)?;
    }
    Ok(b)
}

/// `I₃` at one `y` node given `I₁` there and the slow gradients at that node.
pub fn i3_from_i1(n: usize, i1: &[Vec<f64>], c_at_y: &[f64]) -> Vec<Vec<f64>> {
    let nz = i1[0].len();
    let nc = n.pow(4);
    let mut out = vec![vec![0.0; nz]; nc];
    let mut t = vec![0.0; nc];
    let mut r = vec![0.0; nc];
    for p in 0..nz {
        for c in 0..nc {
            t[c] = i1[c][p];
        }
        contract_with_gradient(n, &t, c_at_y, &mut r);
        for c in 0..nc {
            out[c][p] = -r[c];
        }
    }
    out
}

pub fn compute_i1(a: &TwoScaleCoefficient, fast: &FastCorrectorFamily) -> Result<TwoScaleField> {
    if fast.grid != a.grid {
        return Err(Error::GridMismatch);
    }
    let n = a.dim();
    let sp = Spectral::new(&a.grid.z.shape());
    let mut out = TwoScaleField::zeros(a.grid, n.pow(4));
    for y in 0..a.grid.y.len() {
        for (c, f) in i1_at(a, fast, &sp, y)?.into_iter().enumerate() {
            out.slice_mut(c, y).copy_from_slice(&f);
        }
    }
    Ok(out)
}

pub fn compute_i3(
    a: &TwoScaleCoefficient,
    fast: &FastCorrectorFamily,
    slow: &SlowCorrectorFamily,
) -> Result<TwoScaleField> {
    if fast.grid != a.grid || slow.grid != a.grid.y {
        return Err(Error::GridMismatch);
    }
    let n = a.dim();
    let sp = Spectral::new(&a.grid.z.shape());
    let cg = slow_gradients(slow);
    let mut out = TwoScaleField::zeros(a.grid, n.pow(4));
    let mut cy = vec![0.0; n.pow(4)];
    for y in 0..a.grid.y.len() {
        for (c, f) in cg.iter().enumerate() {
            cy[c] = f[y];
        }
        let i1 = i1_at(a, fast, &sp, y)?;
        for (c, f) in i3_from_i1(n, &i1, &cy).into_iter().enumerate() {
            out.slice_mut(c, y).copy_from_slice(&f);
        }
    }
    Ok(out)
}

/// `I₂` on `Y`, returned with its measured `Y`-average (before removal).
#[derive(Clone, Debug)]
pub struct SlowDiscrepancy {
    pub grid: PeriodicGrid,
    pub fields: Vec<Vec<f64>>,
    /// Largest componentwise `|⨍_Y I₂|` before it was subtracted.
    pub measured_mean: f64,
}

pub fn compute_i2(a_hat: &[f64], a2: &MesoscaleCoefficient, slow: &SlowCorrectorFamily) -> Result<SlowDiscrepancy> {
    let grid = a2.grid();
    if slow.grid != grid {
        return Err(Error::GridMismatch);
    }
    let n = grid.dim();
    let nc = n.pow(4);
    let len = grid.len();
    let cg = slow_gradients(slow);
    let mut fields = vec![vec![0.0; len]; nc];
    let (mut t, mut c, mut r) = (vec![0.0; nc], vec![0.0; nc], vec![0.0; nc]);
    for p in 0..len {
        a2.a2.at(p, &mut t);
        for (k, f) in cg.iter().enumerate() {
            c[k] = f[p];
        }
        contract_with_gradient(n, &t, &c, &mut r);
        for k in 0..nc {
            fields[k][p] = a_hat[k] - t[k] + r[k];
        }
    }
    let scale = a2.a2.components.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut measured = 0.0f64;
    for f in fields.iter_mut() {
        let m = mean(f);
        measured = measured.max(m.abs());
        if m.abs() > 1e-9 * scale {
            return Err(Error::MeanNotZero { mean: m, scale });
        }
        f.iter_mut().for_each(|v| *v -= m);
    }
    Ok(SlowDiscrepancy { grid, fields, measured_mean: measured })
}
