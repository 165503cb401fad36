use alloc::vec::Vec;

use crate::{Error, Result};

/// Uniform grid on the unit cube with periodic identification of opposite faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PeriodicGrid {
    dim: usize,
    points: usize,
}

impl PeriodicGrid {
    pub fn new(dim: usize, points: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("grid dimension must be positive"));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidInput("points per dimension must be a power of two >= 4"));
        }
        Ok(PeriodicGrid { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> Vec<usize> {
        alloc::vec![self.points; self.dim]
    }

    /// Multi-index of a flat node index, last axis fastest.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for d in (0..self.dim).rev() {
            out[d] = flat % self.points;
            flat /= self.points;
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Coordinates `j·h` of a node.
    pub fn coord(&self, flat: usize, out: &mut [f64]) {
        let h = self.spacing();
        let mut f = flat;
        for d in (0..self.dim).rev() {
            out[d] = (f % self.points) as f64 * h;
            f /= self.points;
        }
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut x = alloc::vec![0.0; self.dim];
        self.coord(flat, &mut x);
        x
    }
}

/// Product grid `Y × Z` used for functions of `(y, z)`; the `y` index is the slow one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TwoScaleGrid {
    pub y: PeriodicGrid,
    pub z: PeriodicGrid,
}

impl TwoScaleGrid {
    pub fn new(y: PeriodicGrid, z: PeriodicGrid) -> Result<Self> {
        if y.dim() != z.dim() {
            return Err(Error::GridMismatch);
        }
        Ok(TwoScaleGrid { y, z })
    }

    pub fn dim(&self) -> usize {
        self.y.dim()
    }

    pub fn len(&self) -> usize {
        self.y.len() * self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Axes `[Ny; n] ++ [Nz; n]`.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = self.y.shape();
        s.extend(self.z.shape());
        s
    }

    #[inline]
    pub fn flat(&self, y: usize, z: usize) -> usize {
        y * self.z.len() + z
    }
}
