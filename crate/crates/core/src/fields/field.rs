use alloc::vec;
use alloc::vec::Vec;

use super::grid::{PeriodicGrid, TwoScaleGrid};

/// Pairwise summation; exact for `2^k` equal terms.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => return 0.0,
        1 => return v[0],
        2 => return v[0] + v[1],
        _ => {}
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Real scalar values at the nodes of a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.coord(i, &mut x);
                f(&x)
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// The mean-zero tag: `|avg| <= 1e-12 · max|values|`.
    pub fn is_mean_zero(&self) -> bool {
        self.mean().abs() <= 1e-12 * self.max_abs()
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        self.values.iter_mut().for_each(|v| *v -= m);
    }
}

/// `n` components on a grid of dimension `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub grid: PeriodicGrid,
    pub components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        VectorField { grid, components: vec![vec![0.0; grid.len()]; grid.dim()] }
    }

    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let n = grid.dim();
        let mut components = vec![vec![0.0; grid.len()]; n];
        let mut x = vec![0.0; n];
        let mut v = vec![0.0; n];
        for i in 0..grid.len() {
            grid.coord(i, &mut x);
            f(&x, &mut v);
            for a in 0..n {
                components[a][i] = v[a];
            }
        }
        VectorField { grid, components }
    }

    pub fn means(&self) -> Vec<f64> {
        self.components.iter().map(|c| mean(c)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| max_abs(c)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }
}

/// Rank-4 tensor `a_ij^{αβ}` per node, component index from [`super::index::t4`].
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4Field {
    pub grid: PeriodicGrid,
    pub components: Vec<Vec<f64>>,
}

impl Tensor4Field {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        let n = grid.dim();
        Tensor4Field { grid, components: vec![vec![0.0; grid.len()]; n * n * n * n] }
    }

    pub fn constant(grid: PeriodicGrid, tensor: &[f64]) -> Self {
        Tensor4Field { grid, components: tensor.iter().map(|&t| vec![t; grid.len()]).collect() }
    }

    /// Fill from a pointwise tensor evaluator; the buffer starts zeroed at every node.
    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let n = grid.dim();
        let nc = n * n * n * n;
        let mut components = vec![vec![0.0; grid.len()]; nc];
        let mut x = vec![0.0; n];
        let mut t = vec![0.0; nc];
        for i in 0..grid.len() {
            grid.coord(i, &mut x);
            t.iter_mut().for_each(|v| *v = 0.0);
            f(&x, &mut t);
            for c in 0..nc {
                components[c][i] = t[c];
            }
        }
        Tensor4Field { grid, components }
    }

    pub fn at(&self, node: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c[node];
        }
    }

    pub fn means(&self) -> Vec<f64> {
        self.components.iter().map(|c| mean(c)).collect()
    }

    /// `a_ij^{αβ} = a_ji^{βα}` at every node.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.grid.dim();
        let scale = self.components.iter().map(|c| max_abs(c)).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let u = &self.components[super::index::t4(n, i, j, a, b)];
                        let v = &self.components[super::index::t4(n, j, i, b, a)];
                        if u.iter().zip(v).any(|(x, y)| (x - y).abs() > tol * scale) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Multi-component function of `(y, z)` sampled on a [`TwoScaleGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct TwoScaleField {
    pub grid: TwoScaleGrid,
    pub components: Vec<Vec<f64>>,
}

impl TwoScaleField {
    pub fn zeros(grid: TwoScaleGrid, count: usize) -> Self {
        TwoScaleField { grid, components: vec![vec![0.0; grid.len()]; count] }
    }

    /// The `Z`-slice of component `c` at y-node `y`.
    pub fn slice(&self, c: usize, y: usize) -> &[f64] {
        let nz = self.grid.z.len();
        &self.components[c][y * nz..(y + 1) * nz]
    }

    pub fn slice_mut(&mut self, c: usize, y: usize) -> &mut [f64] {
        let nz = self.grid.z.len();
        &mut self.components[c][y * nz..(y + 1) * nz]
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| max_abs(c)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_zero_tag() {
        let g = PeriodicGrid::new(2, 8).unwrap();
        let mut f = ScalarField::from_fn(g, |x| libm::sin(2.0 * core::f64::consts::PI * x[0]) + 0.5);
        assert!(!f.is_mean_zero());
        f.subtract_mean();
        assert!(f.is_mean_zero());
        assert!(f.is_finite());
    }
}
