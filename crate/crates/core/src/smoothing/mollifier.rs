use alloc::vec;
use alloc::vec::Vec;

use crate::fields::{Domain, DomainKind};
use crate::{Error, Result};

/// Bump `exp(−1/(1 − |x − c|²/r²))` supported in the ball `B(c, r) ⊂ B(0, ½)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mollifier {
    center: Vec<f64>,
    radius: f64,
}

impl Mollifier {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        let c = libm::sqrt(center.iter().map(|v| v * v).sum::<f64>());
        if !(radius > 0.0) || c + radius > 0.5 + 1e-15 {
            return Err(Error::InvalidInput("mollifier support must lie in the ball of radius 1/2"));
        }
        Ok(Mollifier { center, radius })
    }

    /// The default: radius `¼`, centered at `(0.2, 0, …)`.
    ///
    /// A nonzero first moment makes `S_ε f − f` exactly first order in `ε`;
    /// a symmetric bump would give second order for smooth `f`.
    pub fn standard(dim: usize) -> Self {
        let mut center = vec![0.0; dim];
        center[0] = 0.2;
        Mollifier { center, radius: 0.25 }
    }

    /// Radial bump filling the ball of radius `½`.
    pub fn centered(dim: usize) -> Self {
        Mollifier { center: vec![0.0; dim], radius: 0.5 }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Largest `|x|` with `ρ(x) > 0`.
    pub fn support_radius(&self) -> f64 {
        libm::sqrt(self.center.iter().map(|v| v * v).sum::<f64>()) + self.radius
    }

    /// Unnormalized profile.
    pub fn profile(&self, x: &[f64]) -> f64 {
        let s: f64 =
            x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() / (self.radius * self.radius);
        if s < 1.0 {
            libm::exp(-1.0 / (1.0 - s))
        } else {
            0.0
        }
    }

    /// Quadrature weights of `ρ_ε` on the node lattice of `domain`.
    pub fn kernel(&self, domain: &Domain, eps: f64) -> Result<Kernel> {
        let h = domain.spacing();
        if !(eps >= 2.0 * h) {
            return Err(Error::EpsilonTooSmall { eps, spacing: h });
        }
        let n = domain.dim();
        if n != self.dim() {
            return Err(Error::GridMismatch);
        }
        let reach = libm::ceil(eps * self.support_radius() / h) as i64;
        let width = (2 * reach + 1) as usize;
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut idx = vec![0i64; n];
        let mut y = vec![0.0; n];
        for flat in 0..width.pow(n as u32) {
            let mut f = flat;
            for d in (0..n).rev() {
                idx[d] = (f % width) as i64 - reach;
                f /= width;
            }
            for d in 0..n {
                y[d] = idx[d] as f64 * h / eps;
            }
            let w = self.profile(&y);
            if w > 0.0 {
                offsets.extend_from_slice(&idx);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return Err(Error::EpsilonTooSmall { eps, spacing: h });
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Kernel { dim: n, offsets, weights })
    }
}

/// Normalized weights `w_j` with `S_ε f(x_i) = Σ_j w_j f(x_i − x_j)`.
#[derive(Clone, Debug)]
pub struct Kernel {
    dim: usize,
    /// `dim` integer lattice offsets per weight.
    offsets: Vec<i64>,
    pub weights: Vec<f64>,
}

impl Kernel {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn offset(&self, j: usize) -> &[i64] {
        &self.offsets[j * self.dim..(j + 1) * self.dim]
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest offset norm in lattice units.
    pub fn reach(&self) -> f64 {
        (0..self.len())
            .map(|j| libm::sqrt(self.offset(j).iter().map(|&o| (o * o) as f64).sum::<f64>()))
            .fold(0.0, f64::max)
    }

    /// Apply to a field on `domain`: periodic wrap on the torus, zero
    /// extension outside the square.
    pub fn apply(&self, domain: &Domain, f: &[f64]) -> Vec<f64> {
        let n = domain.points();
        let dim = self.dim;
        let len = domain.len();
        let mut out = vec![0.0; len];
        let periodic = domain.kind == DomainKind::Torus;
        let rows = len / n;
        let mut ridx = vec![0usize; dim.saturating_sub(1)];
        for j in 0..self.len() {
            let w = self.weights[j];
            let o = self.offset(j);
            let shift = o[dim - 1];
            for r in 0..rows {
                // source row: each outer index shifted by −o
                let mut f_r = r;
                for d in (0..dim - 1).rev() {
                    ridx[d] = f_r % n;
                    f_r /= n;
                }
                let mut src = 0usize;
                let mut inside = true;
                for d in 0..dim - 1 {
                    let s = ridx[d] as i64 - o[d];
                    let s = if periodic {
                        s.rem_euclid(n as i64)
                    } else if s < 0 || s >= n as i64 {
                        inside = false;
                        break;
                    } else {
                        s
                    };
                    src = src * n + s as usize;
                }
                if !inside {
                    continue;
                }
                let dst = &mut out[r * n..(r + 1) * n];
                let srow = &f[src * n..(src + 1) * n];
                for (c, v) in dst.iter_mut().enumerate() {
                    let s = c as i64 - shift;
                    let s = if periodic {
                        s.rem_euclid(n as i64)
                    } else if s < 0 || s >= n as i64 {
                        continue;
                    } else {
                        s
                    };
                    *v += w * srow[s as usize];
                }
            }
        }
        out
    }
}

/// `S_ε f = ρ_ε ∗ f` by direct quadrature over the support ball.
pub fn mollify(domain: &Domain, f: &[f64], eps: f64, rho: &Mollifier) -> Result<Vec<f64>> {
    if f.len() != domain.len() {
        return Err(Error::GridMismatch);
    }
    Ok(rho.kernel(domain, eps)?.apply(domain, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_stays_in_half_ball() {
        assert!(Mollifier::new(vec![0.3, 0.0], 0.25).is_err());
        assert!((Mollifier::standard(2).support_radius() - 0.45).abs() < 1e-15);
        assert_eq!(Mollifier::centered(2).support_radius(), 0.5);
        let m = Mollifier::standard(2);
        assert_eq!(m.profile(&[0.2 + 0.25, 0.0]), 0.0);
        assert!(m.profile(&[0.2, 0.0]) > 0.0);
    }

    #[test]
    fn kernel_has_unit_mass_and_bounded_reach() {
        let d = Domain::torus(2, 64).unwrap();
        let k = Mollifier::standard(2).kernel(&d, 0.25).unwrap();
        assert!((k.mass() - 1.0).abs() < 1e-14);
        assert!(k.reach() * d.spacing() <= 0.25 * 0.45 + 1e-12);
        assert!(k.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn rejects_unresolved_eps() {
        let d = Domain::torus(2, 16).unwrap();
        let e = Mollifier::standard(2).kernel(&d, 0.1).unwrap_err();
        assert_eq!(e, Error::EpsilonTooSmall { eps: 0.1, spacing: 1.0 / 16.0 });
    }

    #[test]
    fn constant_is_preserved_on_torus() {
        let d = Domain::torus(2, 32).unwrap();
        let f = vec![2.5; d.len()];
        let s = mollify(&d, &f, 0.2, &Mollifier::standard(2)).unwrap();
        assert!(s.iter().all(|v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn shift_matches_hand_convolution() {
        // a single weight at offset (0, 1) shifts by one column
        let d = Domain::torus(2, 4).unwrap();
        let k = Kernel { dim: 2, offsets: vec![0, 1], weights: vec![1.0] };
        let f: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let s = k.apply(&d, &f);
        assert_eq!(&s[0..4], &[3.0, 0.0, 1.0, 2.0]);
        let sq = Domain::square(4).unwrap();
        let s = k.apply(&sq, &f);
        assert_eq!(&s[0..4], &[0.0, 0.0, 1.0, 2.0]);
    }
}
