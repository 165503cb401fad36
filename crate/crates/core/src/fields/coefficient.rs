//! Trigonometric-polynomial coefficient tensors `A(y, z)` and their sampling.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{Tensor4Field, TwoScaleField};
use super::grid::{PeriodicGrid, TwoScaleGrid};
use super::index::t4;
use crate::linalg::dense::symmetric_eigenvalues;
use crate::{Error, Result};

/// `amplitude · cos(2π(k_y·y + k_z·z) + phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTerm {
    /// `n⁴` entries indexed by [`t4`].
    pub amplitude: Vec<f64>,
    pub wave_y: Vec<i64>,
    pub wave_z: Vec<i64>,
    pub phase: f64,
}

impl CoefficientTerm {
    /// Scalar multiple of `δ_ij δ_αβ`.
    pub fn isotropic(dim: usize, scale: f64, wave_y: &[i64], wave_z: &[i64], phase: f64) -> Self {
        let mut amplitude = vec![0.0; dim.pow(4)];
        for i in 0..dim {
            for a in 0..dim {
                amplitude[t4(dim, i, i, a, a)] = scale;
            }
        }
        CoefficientTerm { amplitude, wave_y: wave_y.to_vec(), wave_z: wave_z.to_vec(), phase }
    }

    fn angle(&self, y: &[f64], z: &[f64]) -> f64 {
        let mut s = 0.0;
        for d in 0..y.len() {
            s += self.wave_y[d] as f64 * y[d] + self.wave_z[d] as f64 * z[d];
        }
        2.0 * PI * s + self.phase
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSpec {
    dim: usize,
    mu: f64,
    terms: Vec<CoefficientTerm>,
}

impl CoefficientSpec {
    pub fn new(dim: usize, mu: f64, terms: Vec<CoefficientTerm>) -> Result<Self> {
        if dim == 0 || !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::InvalidInput("need dim >= 1 and 0 < mu <= 1"));
        }
        for t in &terms {
            if t.amplitude.len() != dim.pow(4) || t.wave_y.len() != dim || t.wave_z.len() != dim {
                return Err(Error::InvalidInput("coefficient term has wrong shape"));
            }
            if !t.phase.is_finite() || t.amplitude.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidInput("coefficient term is not finite"));
            }
        }
        Ok(CoefficientSpec { dim, mu, terms })
    }

    /// `a_ij^{αβ} = δ_ij δ_αβ`.
    pub fn identity(dim: usize) -> Self {
        let t = CoefficientTerm::isotropic(dim, 1.0, &vec![0; dim], &vec![0; dim], 0.0);
        CoefficientSpec { dim, mu: 1.0, terms: vec![t] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn terms(&self) -> &[CoefficientTerm] {
        &self.terms
    }

    pub fn depends_on_y(&self) -> bool {
        self.terms.iter().any(|t| t.wave_y.iter().any(|&k| k != 0))
    }

    pub fn depends_on_z(&self) -> bool {
        self.terms.iter().any(|t| t.wave_z.iter().any(|&k| k != 0))
    }

    /// Largest `|k_z|_∞` over terms.
    pub fn max_wave(&self) -> i64 {
        self.terms.iter().flat_map(|t| t.wave_y.iter().chain(&t.wave_z)).map(|k| k.abs()).max().unwrap_or(0)
    }

    /// `a_ij^{αβ} = a_ji^{βα}` for every term, hence everywhere.
    pub fn is_symmetric(&self) -> bool {
        let n = self.dim;
        self.terms.iter().all(|t| {
            (0..n).all(|i| {
                (0..n).all(|j| {
                    (0..n).all(|a| (0..n).all(|b| t.amplitude[t4(n, i, j, a, b)] == t.amplitude[t4(n, j, i, b, a)]))
                })
            })
        })
    }

    /// Tensor at `(y, z)` into `out` (`n⁴` entries).
    pub fn eval(&self, y: &[f64], z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.terms {
            let c = libm::cos(t.angle(y, z));
            for (o, &a) in out.iter_mut().zip(&t.amplitude) {
                *o += a * c;
            }
        }
    }

    /// Lipschitz constant in `y` (Frobenius norm): `Σ |T|·2π|k_y|`.
    pub fn lipschitz_y(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let amp = libm::sqrt(t.amplitude.iter().map(|a| a * a).sum::<f64>());
                let k = libm::sqrt(t.wave_y.iter().map(|&k| (k * k) as f64).sum::<f64>());
                amp * 2.0 * PI * k
            })
            .sum()
    }

    /// `A(y, z)` with `y = x/ε`, `z = x/ε²` at the nodes of a macroscopic grid.
    pub fn eval_oscillating(&self, grid: PeriodicGrid, eps: f64) -> Tensor4Field {
        let n = self.dim;
        let mut y = vec![0.0; n];
        let mut z = vec![0.0; n];
        Tensor4Field::from_fn(grid, |x, out| {
            for d in 0..n {
                y[d] = x[d] / eps;
                z[d] = x[d] / (eps * eps);
            }
            self.eval(&y, &z, out);
        })
    }

    /// `A(x, x)` on a grid, the `ε = 1` member of the family.
    pub fn eval_diagonal(&self, grid: PeriodicGrid) -> Tensor4Field {
        Tensor4Field::from_fn(grid, |x, out| self.eval(x, x, out))
    }

    /// Adjoint coefficient `a*_ij^{αβ} = a_ji^{βα}`.
    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut amp = vec![0.0; n.pow(4)];
                for i in 0..n {
                    for j in 0..n {
                        for a in 0..n {
                            for b in 0..n {
                                amp[t4(n, i, j, a, b)] = t.amplitude[t4(n, j, i, b, a)];
                            }
                        }
                    }
                }
                CoefficientTerm { amplitude: amp, ..t.clone() }
            })
            .collect();
        CoefficientSpec { dim: n, mu: self.mu, terms }
    }
}

/// Extreme eigenvalues of the symmetric part of `ξ ↦ a_ij^{αβ} ξ_i^α ξ_j^β`.
pub fn ellipticity_bounds(tensor: &[f64], n: usize) -> (f64, f64) {
    let m = n * n;
    let mut s = vec![0.0; m * m];
    for i in 0..n {
        for a in 0..n {
            for j in 0..n {
                for b in 0..n {
                    let r = i * n + a;
                    let c = j * n + b;
                    s[r * m + c] = 0.5 * (tensor[t4(n, i, j, a, b)] + tensor[t4(n, j, i, b, a)]);
                }
            }
        }
    }
    let e = symmetric_eigenvalues(&mut s, m);
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Outcome of the Legendre check on a set of sampled tensors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityReport {
    /// Exact extremes of the symmetric-part spectrum over all sampled points.
    pub min_eig: f64,
    pub max_eig: f64,
    /// Extremes of `Aξξ/|ξ|²` over random `(point, ξ)` pairs.
    pub min_rayleigh: f64,
    pub max_rayleigh: f64,
    pub samples: usize,
}

impl EllipticityReport {
    /// Certify from a slice of tensors (each `n⁴` long, exposed by `get`).
    pub fn build(count: usize, n: usize, mut get: impl FnMut(usize, &mut [f64]), samples: usize, seed: u64) -> Self {
        let mut t = vec![0.0; n.pow(4)];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in 0..count {
            get(p, &mut t);
            let (a, b) = ellipticity_bounds(&t, n);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut rlo, mut rhi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut xi = vec![0.0; n * n];
        for _ in 0..samples {
            let p = rng.gen_range(0..count.max(1));
            get(p, &mut t);
            xi.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
            let q = rayleigh(&t, &xi, n);
            rlo = rlo.min(q);
            rhi = rhi.max(q);
        }
        EllipticityReport { min_eig: lo, max_eig: hi, min_rayleigh: rlo, max_rayleigh: rhi, samples }
    }

    /// `μ ≤ λ_min` and `λ_max ≤ 1/μ`, up to round-off.
    pub fn satisfies(&self, mu: f64) -> bool {
        self.min_eig >= mu * (1.0 - 1e-12) && self.max_eig <= (1.0 + 1e-12) / mu
    }

    pub fn check(&self, mu: f64) -> Result<()> {
        if self.satisfies(mu) {
            Ok(())
        } else {
            Err(Error::EllipticityViolation { min: self.min_eig, max: self.max_eig, mu })
        }
    }
}

/// `a_ij^{αβ} ξ_i^α ξ_j^β / |ξ|²` with `ξ` indexed `i·n + α`.
pub fn rayleigh(t: &[f64], xi: &[f64], n: usize) -> f64 {
    let mut num = 0.0;
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    num += t[t4(n, i, j, a, b)] * xi[i * n + a] * xi[j * n + b];
                }
            }
        }
    }
    num / xi.iter().map(|v| v * v).sum::<f64>()
}

/// `A` sampled on `Y × Z` nodes with its ellipticity certificate.
#[derive(Clone, Debug)]
pub struct TwoScaleCoefficient {
    pub spec: CoefficientSpec,
    pub grid: TwoScaleGrid,
    /// `n⁴` components, each a function on `Y × Z`.
    pub samples: TwoScaleField,
    pub report: EllipticityReport,
}

pub const RAYLEIGH_SAMPLES: usize = 10_000;

impl TwoScaleCoefficient {
    /// Sample `spec` on `gy × gz` and verify the Legendre condition with its `μ`.
    pub fn sample(spec: &CoefficientSpec, gy: PeriodicGrid, gz: PeriodicGrid) -> Result<Self> {
        Self::sample_seeded(spec, gy, gz, 0x5eed)
    }

    pub fn sample_seeded(spec: &CoefficientSpec, gy: PeriodicGrid, gz: PeriodicGrid, seed: u64) -> Result<Self> {
        let n = spec.dim();
        if gy.dim() != n || gz.dim() != n {
            return Err(Error::GridMismatch);
        }
        let grid = TwoScaleGrid::new(gy, gz)?;
        let nc = n.pow(4);
        let mut samples = TwoScaleField::zeros(grid, nc);
        let (ny, nz) = (gy.len(), gz.len());
        let mut x = vec![0.0; n];
        for t in spec.terms() {
            // cos(a + b) = cos a cos b − sin a sin b with a from y, b from z
            let ya: Vec<(f64, f64)> = (0..ny)
                .map(|i| {
                    gy.coord(i, &mut x);
                    let s: f64 = (0..n).map(|d| t.wave_y[d] as f64 * x[d]).sum();
                    let a = 2.0 * PI * s + t.phase;
                    (libm::cos(a), libm::sin(a))
                })
                .collect();
            let zb: Vec<(f64, f64)> = (0..nz)
                .map(|i| {
                    gz.coord(i, &mut x);
                    let s: f64 = (0..n).map(|d| t.wave_z[d] as f64 * x[d]).sum();
                    let b = 2.0 * PI * s;
                    (libm::cos(b), libm::sin(b))
                })
                .collect();
            for (c, &amp) in t.amplitude.iter().enumerate() {
                if amp == 0.0 {
                    continue;
                }
                let comp = &mut samples.components[c];
                for (iy, &(ca, sa)) in ya.iter().enumerate() {
                    let row = &mut comp[iy * nz..(iy + 1) * nz];
                    for (v, &(cb, sb)) in row.iter_mut().zip(&zb) {
                        *v += amp * (ca * cb - sa * sb);
                    }
                }
            }
        }
        let report = EllipticityReport::build(
            grid.len(),
            n,
            |p, out| {
                for c in 0..nc {
                    out[c] = samples.components[c][p];
                }
            },
            RAYLEIGH_SAMPLES,
            seed,
        );
        report.check(spec.mu())?;
        Ok(TwoScaleCoefficient { spec: spec.clone(), grid, samples, report })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// `A(y_index, ·)` as a tensor field on `Z`.
    pub fn fast_slice(&self, y_index: usize) -> Tensor4Field {
        let nc = self.samples.components.len();
        Tensor4Field {
            grid: self.grid.z,
            components: (0..nc).map(|c| self.samples.slice(c, y_index).to_vec()).collect(),
        }
    }

    pub fn at(&self, y_index: usize, z_index: usize, out: &mut [f64]) {
        let p = self.grid.flat(y_index, z_index);
        for (o, c) in out.iter_mut().zip(&self.samples.components) {
            *o = c[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modulated(amp: f64, mu: f64) -> CoefficientSpec {
        // δδ (1 + amp sin 2πy₁ sin 2πz₁) = δδ [1 + amp/2 cos(y₁ − z₁) − amp/2 cos(y₁ + z₁)]
        let n = 2;
        let terms = vec![
            CoefficientTerm::isotropic(n, 1.0, &[0, 0], &[0, 0], 0.0),
            CoefficientTerm::isotropic(n, amp / 2.0, &[1, 0], &[-1, 0], 0.0),
            CoefficientTerm::isotropic(n, -amp / 2.0, &[1, 0], &[1, 0], 0.0),
        ];
        CoefficientSpec::new(n, mu, terms).unwrap()
    }

    #[test]
    fn identity_samples() {
        let g = PeriodicGrid::new(2, 4).unwrap();
        let a = TwoScaleCoefficient::sample(&CoefficientSpec::identity(2), g, g).unwrap();
        assert!((a.report.min_eig - 1.0).abs() < 1e-14);
        assert!((a.report.min_rayleigh - 1.0).abs() < 1e-12);
        for c in 0..16 {
            let want = if [0, 3, 12, 15].contains(&c) { 1.0 } else { 0.0 };
            assert!(a.samples.components[c].iter().all(|&v| v == want));
        }
    }

    #[test]
    fn modulated_passes_and_overshoot_fails() {
        let g = PeriodicGrid::new(2, 8).unwrap();
        let a = TwoScaleCoefficient::sample(&modulated(0.5, 0.5), g, g).unwrap();
        assert!(a.report.min_rayleigh >= 0.5 - 1e-12);
        let err = TwoScaleCoefficient::sample(&modulated(1.5, 0.5), g, g).unwrap_err();
        assert!(matches!(err, Error::EllipticityViolation { .. }));
        // direct pointwise evaluation at y₁ = z₁ = 3/4 gives 1 + 1.5 = 2.5 > 1/μ
        let mut t = [0.0; 16];
        modulated(1.5, 0.5).eval(&[0.75, 0.0], &[0.75, 0.0], &mut t);
        assert!((t[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn samples_match_pointwise_and_wrap() {
        let spec = modulated(0.5, 0.5);
        let (gy, gz) = (PeriodicGrid::new(2, 8).unwrap(), PeriodicGrid::new(2, 16).unwrap());
        let a = TwoScaleCoefficient::sample(&spec, gy, gz).unwrap();
        let mut t = [0.0; 16];
        for iy in [0, 3, 17, 63] {
            for iz in [0, 5, 100, 255] {
                spec.eval(&gy.coords(iy), &gz.coords(iz), &mut t);
                for c in 0..16 {
                    assert!((a.samples.components[c][a.grid.flat(iy, iz)] - t[c]).abs() < 1e-14);
                }
            }
        }
        let mut w = [0.0; 16];
        spec.eval(&[1.0, 1.0], &[1.0, 0.0], &mut w);
        spec.eval(&[0.0, 0.0], &[0.0, 0.0], &mut t);
        for c in 0..16 {
            assert!((w[c] - t[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn lipschitz_bound_holds_on_random_pairs() {
        let spec = modulated(0.5, 0.5);
        let m = spec.lipschitz_y();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut a, mut b) = ([0.0; 16], [0.0; 16]);
        for _ in 0..2000 {
            let y1 = [rng.gen::<f64>(), rng.gen::<f64>()];
            let y2 = [y1[0] + 0.01 * rng.gen::<f64>(), y1[1] - 0.01 * rng.gen::<f64>()];
            let z = [rng.gen::<f64>(), rng.gen::<f64>()];
            spec.eval(&y1, &z, &mut a);
            spec.eval(&y2, &z, &mut b);
            let d = libm::sqrt(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>());
            let dy = libm::hypot(y1[0] - y2[0], y1[1] - y2[1]);
            assert!(d <= m * dy * (1.0 + 1e-12));
        }
    }
}
