use alloc::vec::Vec;

use super::grid::PeriodicGrid;
use super::spectral::Spectral;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainKind {
    /// Unit torus, nodes at `j·h`.
    Torus,
    /// Unit square `(0,1)²` with Dirichlet data, nodes at cell centers `(j + ½)·h`.
    Square,
}

/// Macroscopic domain and the node lattice every macro field is stored on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Domain {
    pub kind: DomainKind,
    grid: PeriodicGrid,
}

impl Domain {
    pub fn torus(dim: usize, points: usize) -> Result<Self> {
        Ok(Domain { kind: DomainKind::Torus, grid: PeriodicGrid::new(dim, points)? })
    }

    pub fn square(points: usize) -> Result<Self> {
        Ok(Domain { kind: DomainKind::Square, grid: PeriodicGrid::new(2, points)? })
    }

    pub fn new(kind: DomainKind, dim: usize, points: usize) -> Result<Self> {
        match kind {
            DomainKind::Torus => Self::torus(dim, points),
            DomainKind::Square if dim == 2 => Self::square(points),
            DomainKind::Square => Err(Error::InvalidInput("the square domain is two-dimensional")),
        }
    }

    pub fn is_torus(&self) -> bool {
        self.kind == DomainKind::Torus
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn points(&self) -> usize {
        self.grid.points()
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The index lattice, used for transforms and node bookkeeping.
    pub fn lattice(&self) -> PeriodicGrid {
        self.grid
    }

    /// Node position in units of `h` is `index + offset`.
    pub fn offset(&self) -> f64 {
        match self.kind {
            DomainKind::Torus => 0.0,
            DomainKind::Square => 0.5,
        }
    }

    pub fn coord(&self, flat: usize, out: &mut [f64]) {
        let h = self.spacing();
        let s = self.offset();
        let n = self.points();
        let mut f = flat;
        for d in (0..self.dim()).rev() {
            out[d] = ((f % n) as f64 + s) * h;
            f /= n;
        }
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut x = alloc::vec![0.0; self.dim()];
        self.coord(flat, &mut x);
        x
    }

    /// `dist(x, ∂Ω)`; infinite on the torus.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        match self.kind {
            DomainKind::Torus => f64::INFINITY,
            DomainKind::Square => x.iter().fold(f64::INFINITY, |m, &v| m.min(v).min(1.0 - v)),
        }
    }

    /// Node lies in `Σ_r = {dist(x, ∂Ω) > r}`.
    pub fn in_inner_region(&self, flat: usize, r: f64) -> bool {
        let x = self.coords(flat);
        self.distance_to_boundary(&x) > r
    }

    /// Quadrature weight `h^n` of each node.
    pub fn cell_volume(&self) -> f64 {
        libm::pow(self.spacing(), self.dim() as f64)
    }

    /// `∂_d f` for every axis: spectral on the torus, second-order
    /// differences on the square (one-sided at the edge nodes).
    pub fn gradient(&self, f: &[f64]) -> Vec<Vec<f64>> {
        match self.kind {
            DomainKind::Torus => {
                let sp = Spectral::new(&self.grid.shape());
                let s = sp.forward(f);
                let mut d = s.clone();
                (0..self.dim())
                    .map(|axis| {
                        sp.derivative(&s, axis, &mut d);
                        sp.inverse(&d)
                    })
                    .collect()
            }
            DomainKind::Square => (0..self.dim()).map(|axis| self.difference(f, axis)).collect(),
        }
    }

    fn difference(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let n = self.points();
        let stride = n.pow((self.dim() - 1 - axis) as u32);
        let inv = 0.5 / self.spacing();
        let mut out = alloc::vec![0.0; f.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let c = (k / stride) % n;
            *o = if c == 0 {
                (-3.0 * f[k] + 4.0 * f[k + stride] - f[k + 2 * stride]) * inv
            } else if c == n - 1 {
                (3.0 * f[k] - 4.0 * f[k - stride] + f[k - 2 * stride]) * inv
            } else {
                (f[k + stride] - f[k - stride]) * inv
            };
        }
        out
    }

    /// `(Σ_nodes h^n |f|²)^{1/2}`, optionally restricted to `mask`.
    pub fn l2_norm(&self, f: &[f64], mask: Option<&[bool]>) -> f64 {
        let s: f64 = match mask {
            Some(m) => f.iter().zip(m).filter(|(_, &keep)| keep).map(|(v, _)| v * v).sum(),
            None => f.iter().map(|v| v * v).sum(),
        };
        libm::sqrt(s * self.cell_volume())
    }

    /// Quadrature of `f` over the domain.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        super::field::pairwise_sum(f) * self.cell_volume()
    }

    pub fn inradius(&self) -> f64 {
        match self.kind {
            DomainKind::Torus => f64::INFINITY,
            DomainKind::Square => 0.5,
        }
    }
}
