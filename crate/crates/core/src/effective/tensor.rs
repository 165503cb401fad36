use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::discrepancy::{contract_with_gradient, slow_gradients};
use crate::cellsolve::{mesoscale_at, FastCorrectorFamily, MesoscaleCoefficient, SlowCorrectorFamily};
use crate::fields::index::t4;
use crate::fields::{mean, EllipticityReport, Spectral, TwoScaleCoefficient};
use crate::{Error, Result};

/// Constant homogenized tensor `â_ij^{αβ}` with its ellipticity certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveTensor {
    pub dim: usize,
    pub a_hat: Vec<f64>,
    /// `(â_ij^{αβ} + â_ji^{βα}) / 2`, the part seen by quadratic forms.
    pub symmetrized: Vec<f64>,
    pub report: EllipticityReport,
}

impl EffectiveTensor {
    pub fn new(dim: usize, a_hat: Vec<f64>, mu: f64, seed: u64) -> Result<Self> {
        let n = dim;
        let mut symmetrized = vec![0.0; n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        symmetrized[t4(n, i, j, a, b)] = 0.5 * (a_hat[t4(n, i, j, a, b)] + a_hat[t4(n, j, i, b, a)]);
                    }
                }
            }
        }
        let report = EllipticityReport::build(1, n, |_, out| out.copy_from_slice(&a_hat), 10_000, seed);
        let t = EffectiveTensor { dim, a_hat, symmetrized, report };
        t.report.check(mu)?;
        Ok(t)
    }

    /// `n⁴` rows `i j α β value`, 17 significant digits, row-major.
    pub fn to_table(&self) -> String {
        let n = self.dim;
        let mut s = String::new();
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        s += &format!(
                            "{} {} {} {} {:.16e}\n",
                            i + 1,
                            j + 1,
                            a + 1,
                            b + 1,
                            self.a_hat[t4(n, i, j, a, b)]
                        );
                    }
                }
            }
        }
        s
    }
}

/// `â = ⨍_Y (a₂ − a₂ ∂_yχ(y))`.
pub fn assemble_effective_from(
    a2: &MesoscaleCoefficient,
    slow: &SlowCorrectorFamily,
    mu: f64,
) -> Result<EffectiveTensor> {
    let grid = a2.grid();
    if slow.grid != grid {
        return Err(Error::GridMismatch);
    }
    let n = grid.dim();
    let nc = n.pow(4);
    let cg = slow_gradients(slow);
    let mut vals = vec![vec![0.0; grid.len()]; nc];
    let (mut t, mut c, mut r) = (vec![0.0; nc], vec![0.0; nc], vec![0.0; nc]);
    for p in 0..grid.len() {
        a2.a2.at(p, &mut t);
        for (k, f) in cg.iter().enumerate() {
            c[k] = f[p];
        }
        contract_with_gradient(n, &t, &c, &mut r);
        for k in 0..nc {
            vals[k][p] = t[k] - r[k];
        }
    }
    EffectiveTensor::new(n, vals.iter().map(|v| mean(v)).collect(), mu, 0xa11)
}

/// `â = ⨍⨍ [a − a∂_zχ(y,z) − a∂_yχ(y) + a∂_zχ(y,z)∂_yχ(y)]`.
pub fn assemble_effective(
    a: &TwoScaleCoefficient,
    fast: &FastCorrectorFamily,
    slow: &SlowCorrectorFamily,
) -> Result<EffectiveTensor> {
    if fast.grid != a.grid || slow.grid != a.grid.y {
        return Err(Error::GridMismatch);
    }
    let n = a.dim();
    let nc = n.pow(4);
    let sp = Spectral::new(&a.grid.z.shape());
    let cg = slow_gradients(slow);
    let ny = a.grid.y.len();
    let mut vals = vec![vec![0.0; ny]; nc];
    let (mut c, mut r) = (vec![0.0; nc], vec![0.0; nc]);
    for y in 0..ny {
        // the z-average of the bracket is linear in B = a − a∂_zχ, so average first
        let t = mesoscale_at(a, fast, &sp, y);
        for (k, f) in cg.iter().enumerate() {
            c[k] = f[y];
        }
        contract_with_gradient(n, &t, &c, &mut r);
        for k in 0..nc {
            vals[k][y] = t[k] - r[k];
        }
    }
    EffectiveTensor::new(n, vals.iter().map(|v| mean(v)).collect(), a.spec.mu(), 0xa11)
}
