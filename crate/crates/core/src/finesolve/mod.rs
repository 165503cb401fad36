//! Macroscopic solves: the oscillating problem with coefficient
//! `A(x/ε, x/ε²)` and the homogenized problem with `â`, on the unit torus
//! (pseudo-spectral) or the unit square with Dirichlet data (MAC grid).

mod mac;
mod norms;

use alloc::vec;
use alloc::vec::Vec;

pub use mac::Staggered;
pub use norms::{h1_seminorm, l2_norm, layer_mask, norms, FieldNorms};

use crate::cellsolve::{Forcing, SolverOptions, StokesOperator};
use crate::effective::EffectiveTensor;
use crate::fields::{mean, CoefficientSpec, Domain, Spectral, Tensor4Field};
use crate::{Error, Result};
use mac::{solve_mac, BoundaryTrace, MacOperator};

pub type VectorFn<'a> = &'a (dyn Fn(&[f64], &mut [f64]) + Sync);
pub type ScalarFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Domain plus data `f`, `h` and (square only) `g`.
#[derive(Clone, Copy)]
pub struct DomainSpec<'a> {
    pub domain: Domain,
    pub forcing: VectorFn<'a>,
    pub divergence: Option<ScalarFn<'a>>,
    pub boundary: Option<VectorFn<'a>>,
}

impl<'a> DomainSpec<'a> {
    pub fn new(domain: Domain, forcing: VectorFn<'a>) -> Self {
        DomainSpec { domain, forcing, divergence: None, boundary: None }
    }

    pub fn with_divergence(mut self, h: ScalarFn<'a>) -> Self {
        self.divergence = Some(h);
        self
    }

    pub fn with_boundary(mut self, g: VectorFn<'a>) -> Self {
        self.boundary = Some(g);
        self
    }

    /// `f` at the nodes, component-major.
    pub fn sample_forcing(&self) -> Vec<Vec<f64>> {
        let d = &self.domain;
        let n = d.dim();
        let mut out = vec![vec![0.0; d.len()]; n];
        let mut x = vec![0.0; n];
        let mut v = vec![0.0; n];
        for k in 0..d.len() {
            d.coord(k, &mut x);
            (self.forcing)(&x, &mut v);
            for c in 0..n {
                out[c][k] = v[c];
            }
        }
        out
    }

    pub fn sample_divergence(&self) -> Vec<f64> {
        let d = &self.domain;
        match self.divergence {
            Some(h) => (0..d.len()).map(|k| h(&d.coords(k))).collect(),
            None => vec![0.0; d.len()],
        }
    }

    /// `∫_Ω h − ∫_{∂Ω} g·n`, by composite Gauss–Legendre quadrature on the
    /// square and by the node rule (exact for resolved modes) on the torus.
    pub fn compatibility_defect(&self) -> f64 {
        if self.domain.is_torus() {
            return mean(&self.sample_divergence());
        }
        let panels = 64;
        let mut dom = 0.0;
        if let Some(h) = self.divergence {
            for (x, wx) in gauss_points(panels) {
                for (y, wy) in gauss_points(panels) {
                    dom += wx * wy * h(&[x, y]);
                }
            }
        }
        let mut flux = 0.0;
        if let Some(g) = self.boundary {
            let mut v = [0.0; 2];
            for (s, w) in gauss_points(panels) {
                g(&[1.0, s], &mut v);
                flux += w * v[0];
                g(&[0.0, s], &mut v);
                flux -= w * v[0];
                g(&[s, 1.0], &mut v);
                flux += w * v[1];
                g(&[s, 0.0], &mut v);
                flux -= w * v[1];
            }
        }
        dom - flux
    }

    fn validate(&self) -> Result<()> {
        let defect = self.compatibility_defect();
        let hn = self.domain.l2_norm(&self.sample_divergence(), None);
        if defect.abs() > 1e-10 * (1.0 + hn) {
            return Err(Error::InvalidInput("divergence datum and boundary data are incompatible"));
        }
        if self.domain.is_torus() {
            if self.boundary.is_some() {
                return Err(Error::InvalidInput("the torus takes no boundary data"));
            }
            let f = self.sample_forcing();
            let scale = 1.0 + f.iter().map(|c| self.domain.l2_norm(c, None)).fold(0.0, f64::max);
            if f.iter().any(|c| mean(c).abs() > 1e-10 * scale) {
                return Err(Error::InvalidInput("forcing on the torus must be mean-zero"));
            }
        }
        Ok(())
    }
}

fn gauss_points(panels: usize) -> impl Iterator<Item = (f64, f64)> {
    const X: [f64; 5] =
        [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let h = 1.0 / panels as f64;
    (0..panels).flat_map(move |p| (0..5).map(move |q| ((p as f64 + 0.5 * (X[q] + 1.0)) * h, 0.5 * h * W[q])))
}

/// `‖u‖_{H¹} + ‖p‖_{L²}` against `‖f‖_{L²} + ‖h‖_{L²} + ‖g‖_{L²(∂Ω)}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBound {
    pub solution: f64,
    pub data: f64,
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FineReport {
    pub iterations: usize,
    /// Relative momentum residual of the final iterate.
    pub residual: f64,
    /// `‖div u − h‖_{L²}` of the discrete solution.
    pub divergence_residual: f64,
    /// Discrete `∫h − ∮g·n` removed from `h` before solving (square only).
    pub compatibility_defect: f64,
    pub energy: EnergyBound,
}

/// Velocity and mean-zero pressure at the domain nodes.
#[derive(Clone, Debug)]
pub struct FineSolution {
    pub domain: Domain,
    pub velocity: Vec<Vec<f64>>,
    pub pressure: Vec<f64>,
    /// Face unknowns of the square discretization.
    pub staggered: Option<Staggered>,
    pub report: FineReport,
}

impl FineSolution {
    /// `div u` at the nodes, with the discretization's own divergence.
    pub fn divergence(&self) -> Vec<f64> {
        match &self.staggered {
            Some(s) => s.divergence(),
            None => spectral_divergence(&self.domain, &self.velocity),
        }
    }
}

/// `Σ_d ∂_d v^d` by spectral differentiation on the torus lattice.
pub fn spectral_divergence(domain: &Domain, v: &[Vec<f64>]) -> Vec<f64> {
    let sp = Spectral::new(&domain.lattice().shape());
    let mut out = vec![0.0; domain.len()];
    for (d, c) in v.iter().enumerate() {
        let g = sp.derivative_real(c, d);
        out.iter_mut().zip(&g).for_each(|(o, x)| *o += x);
    }
    out
}

/// The grid must carry at least eight points per period of `x/ε²`.
pub fn check_resolution(domain: &Domain, eps: f64) -> Result<()> {
    let h = domain.spacing();
    if h > eps * eps / 8.0 * (1.0 + 1e-12) {
        return Err(Error::ResolutionInsufficient { eps, spacing: h });
    }
    Ok(())
}

/// Smallest power-of-two grid meeting [`check_resolution`], at least 8.
pub fn resolving_points(eps: f64) -> usize {
    let need = libm::ceil(8.0 / (eps * eps) * (1.0 - 1e-12)) as usize;
    need.max(8).next_power_of_two()
}

enum Coefficient<'a> {
    Oscillating(&'a CoefficientSpec, f64),
    Constant(&'a [f64]),
}

impl Coefficient<'_> {
    fn at(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Coefficient::Oscillating(spec, eps) => {
                let n = x.len();
                let mut y = [0.0; 3];
                let mut z = [0.0; 3];
                for d in 0..n {
                    y[d] = x[d] / eps;
                    z[d] = x[d] / (eps * eps);
                }
                spec.eval(&y[..n], &z[..n], out);
            }
            Coefficient::Constant(t) => out.copy_from_slice(t),
        }
    }
}

/// Solve `−div(A(x/ε, x/ε²)∇u) + ∇p = f`, `div u = h` (plus `u = g` on the square).
pub fn solve_reiterated(
    spec: &CoefficientSpec,
    eps: f64,
    problem: &DomainSpec<'_>,
    opts: SolverOptions,
) -> Result<FineSolution> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput("eps must lie in (0, 1]"));
    }
    if spec.dim() != problem.domain.dim() {
        return Err(Error::GridMismatch);
    }
    check_resolution(&problem.domain, eps)?;
    solve(Coefficient::Oscillating(spec, eps), problem, opts)
}

/// Solve the constant-coefficient problem with `â`.
pub fn solve_homogenized(
    a_hat: &EffectiveTensor,
    problem: &DomainSpec<'_>,
    opts: SolverOptions,
) -> Result<FineSolution> {
    if a_hat.dim != problem.domain.dim() {
        return Err(Error::GridMismatch);
    }
    solve(Coefficient::Constant(&a_hat.a_hat), problem, opts)
}

/// Solve with an arbitrary constant tensor (`n⁴` entries).
pub fn solve_constant_tensor(tensor: &[f64], problem: &DomainSpec<'_>, opts: SolverOptions) -> Result<FineSolution> {
    if tensor.len() != problem.domain.dim().pow(4) {
        return Err(Error::GridMismatch);
    }
    solve(Coefficient::Constant(tensor), problem, opts)
}

fn solve(coeff: Coefficient<'_>, problem: &DomainSpec<'_>, opts: SolverOptions) -> Result<FineSolution> {
    problem.validate()?;
    let domain = problem.domain;
    let mut sol = if domain.is_torus() {
        let lattice = domain.lattice();
        let tensor = Tensor4Field::from_fn(lattice, |x, out| coeff.at(x, out));
        let f = problem.sample_forcing();
        let h = problem.divergence.map(|_| problem.sample_divergence());
        let s = StokesOperator::new(&tensor, opts)?.solve(Forcing::Body(&f), h.as_deref())?;
        let h_vals = h.unwrap_or_else(|| vec![0.0; domain.len()]);
        let div = spectral_divergence(&domain, &s.velocity);
        let div_res = domain.l2_norm(&div.iter().zip(&h_vals).map(|(a, b)| a - b).collect::<Vec<_>>(), None);
        FineSolution {
            domain,
            velocity: s.velocity,
            pressure: s.pressure,
            staggered: None,
            report: FineReport {
                iterations: s.report.iterations,
                residual: s.report.residual,
                divergence_residual: div_res,
                compatibility_defect: 0.0,
                energy: EnergyBound::default(),
            },
        }
    } else {
        let n = domain.points();
        let op = MacOperator::new(n, &|x, out| coeff.at(x, out));
        let bt = match problem.boundary {
            Some(g) => BoundaryTrace::sample(n, g),
            None => BoundaryTrace::zero(n),
        };
        let max_iter = opts.max_iter.unwrap_or(40 * n);
        let restart = opts.restart.max(100);
        let m = solve_mac(
            &op,
            problem.forcing,
            problem.divergence.map(|h| h as &dyn Fn(&[f64]) -> f64),
            &bt,
            opts.rtol,
            max_iter,
            restart,
        )?;
        FineSolution {
            domain,
            velocity: m.state.centered(),
            pressure: m.state.p.clone(),
            report: FineReport {
                iterations: m.krylov.iterations,
                residual: m.krylov.residual,
                divergence_residual: m.divergence_residual,
                compatibility_defect: m.compatibility_defect,
                energy: EnergyBound::default(),
            },
            staggered: Some(m.state),
        }
    };
    sol.report.energy = energy_bound(problem, &sol);
    Ok(sol)
}

fn energy_bound(problem: &DomainSpec<'_>, sol: &FineSolution) -> EnergyBound {
    let d = &problem.domain;
    let u = norms(d, &sol.velocity, None);
    let solution = u.h1() + d.l2_norm(&sol.pressure, None);
    let g = match problem.boundary {
        Some(g) if !d.is_torus() => BoundaryTrace::sample(d.points(), g).l2_norm(d.spacing()),
        _ => 0.0,
    };
    let data = l2_norm(d, &problem.sample_forcing(), None) + d.l2_norm(&problem.sample_divergence(), None) + g;
    let ratio = if data > 0.0 { solution / data } else { 0.0 };
    EnergyBound { solution, data, ratio }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_rule() {
        assert_eq!(resolving_points(0.5), 32);
        assert_eq!(resolving_points(1.0 / 3.0), 128);
        assert_eq!(resolving_points(0.25), 128);
        assert_eq!(resolving_points(0.2), 256);
        assert_eq!(resolving_points(1.0 / 6.0), 512);
        let d = Domain::torus(2, 64).unwrap();
        assert!(check_resolution(&d, 0.5).is_ok());
        assert_eq!(check_resolution(&d, 0.25), Err(Error::ResolutionInsufficient { eps: 0.25, spacing: 1.0 / 64.0 }));
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let s: f64 = gauss_points(3).map(|(x, w)| w * x.powi(7)).sum();
        assert!((s - 0.125).abs() < 1e-15);
    }
}
