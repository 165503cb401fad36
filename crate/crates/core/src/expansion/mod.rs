//! Two-scale corrector expansion of the fine solution and its residual terms.
//!
//! Given the fine solution `u_ε` and the homogenized one `u₀`, this builds the
//! corrector `φ`, the remainder `w = u_ε − u₀ + φ`, the pressure correction and
//! the residual fields `H₁ … H₄`, `J₁ … J₃` whose norms drive the error
//! estimates. The identities tying them together are checked numerically.

mod cells;
mod context;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use cells::CorrectorSet;
pub use context::{CorrectorField, ExpansionContext, ExpansionOptions, FluxTerms};

use crate::fields::Domain;
use crate::finesolve::{l2_norm, layer_mask, spectral_divergence, FineSolution};
use crate::smoothing::EvalRoute;
use crate::{Error, Result};

/// `L²` norms of the residual fields.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ResidualNorms {
    pub h1: f64,
    pub h21: f64,
    pub h22: f64,
    pub h23: f64,
    pub h3: f64,
    pub h4: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    /// `‖H₂₁ + H₂₂ + H₂₃‖`.
    pub h2_sum: f64,
}

impl ResidualNorms {
    pub fn entries(&self) -> [(&'static str, f64); 10] {
        [
            ("H1", self.h1),
            ("H21", self.h21),
            ("H22", self.h22),
            ("H23", self.h23),
            ("H3", self.h3),
            ("H4", self.h4),
            ("J1", self.j1),
            ("J2", self.j2),
            ("J3", self.j3),
            ("H21+H22+H23", self.h2_sum),
        ]
    }
}

/// Scales of the macroscopic data that the estimates are measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DataScales {
    pub grad_u0: f64,
    pub hessian_u0: f64,
    /// `‖∇u₀‖` on the strip of width `5ε` along the boundary (zero on the torus).
    pub grad_u0_layer: f64,
}

/// Numerical identities the expansion must satisfy.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExpansionChecks {
    /// `‖div w − div φ − div(u_ε − u₀)‖ / ‖div φ‖` with the discrete divergences.
    pub divergence_identity: f64,
    /// `|∫ div φ|`.
    pub compatibility: f64,
    /// Gap between the two assemblies of the pressure remainder, relative.
    pub pressure_identity: f64,
    /// Pointwise gap in `(â − a)∇u₀ + a∇φ = H₁ + H₂ + H₃ + H₄`, relative.
    pub gradient_identity: f64,
    /// Weak-form gap of `I_m G = H₂ₘ + ∇P_m` against random test fields, per family.
    pub weak_form: [f64; 3],
}

/// Errors, remainders and residuals at one `ε`.
#[derive(Clone, Debug)]
pub struct ExpansionBundle {
    pub eps: f64,
    pub corrector: CorrectorField,
    /// `w = u_ε − u₀ + φ`.
    pub w: Vec<Vec<f64>>,
    /// Mean-zero pressure correction `π̃`.
    pub pi_tilde: Vec<f64>,
    /// `z_ε = p_ε − p₀ + P₁ + P₂ + P₃`.
    pub z: Vec<f64>,
    pub residual_norms: ResidualNorms,
    pub data: DataScales,
    pub checks: ExpansionChecks,
    /// `‖u_ε − u₀‖_{L²}`.
    pub err_u_l2: f64,
    /// `‖w‖_{H¹}` with the exact chain-rule gradient of `φ`.
    pub err_w_h1: f64,
    /// `‖p_ε − p₀ + π̃ − mean‖_{L²}`.
    pub err_p_l2: f64,
    /// `‖z_ε − mean‖_{L²}`.
    pub z_oscillation: f64,
    /// `‖T₁ + … + T₅‖_{L²}`.
    pub t_sum: f64,
    /// `‖div φ‖_{L²}`.
    pub div_phi: f64,
}

impl ExpansionBundle {
    /// `(‖w‖_{H¹} + ‖z − mean‖) / (ε‖∇²u₀‖ + ‖∇u₀‖_{layer} + ε‖∇u₀‖)`.
    pub fn remainder_constant(&self) -> f64 {
        let d = self.eps * self.data.hessian_u0 + self.data.grad_u0_layer + self.eps * self.data.grad_u0;
        (self.err_w_h1 + self.z_oscillation) / d
    }

    /// `‖H₂₁ + H₂₂ + H₂₃‖ / (ε‖∇u₀‖)`.
    pub fn flux_residual_constant(&self) -> f64 {
        self.residual_norms.h2_sum / (self.eps * self.data.grad_u0)
    }

    /// `‖div φ‖ / (ε‖∇²u₀‖ + ‖∇u₀‖_{layer} + ε‖∇u₀‖)`.
    pub fn divergence_constant(&self) -> f64 {
        let d = self.eps * self.data.hessian_u0 + self.data.grad_u0_layer + self.eps * self.data.grad_u0;
        self.div_phi / d
    }
}

fn mean(domain: &Domain, f: &[f64]) -> f64 {
    domain.integrate(f)
}

fn centered(domain: &Domain, f: &[f64]) -> Vec<f64> {
    let m = mean(domain, f);
    f.iter().map(|v| v - m).collect()
}

fn sum_into(out: &mut [Vec<f64>], add: &[Vec<f64>]) {
    for (o, a) in out.iter_mut().zip(add) {
        o.iter_mut().zip(a).for_each(|(x, y)| *x += y);
    }
}

fn discrete_divergence(domain: &Domain, v: &[Vec<f64>]) -> Vec<f64> {
    if domain.is_torus() {
        return spectral_divergence(domain, v);
    }
    let mut out = vec![0.0; domain.len()];
    for (d, c) in v.iter().enumerate() {
        out.iter_mut().zip(&domain.gradient(c)[d]).for_each(|(o, x)| *o += x);
    }
    out
}

/// A smooth vector test field with exact gradient, vanishing on the square's boundary.
struct TestField {
    /// `∂_i Φ^α` at `i·n + α`.
    gradient: Vec<Vec<f64>>,
    divergence: Vec<f64>,
}

fn test_field(domain: &Domain, rng: &mut ChaCha8Rng) -> TestField {
    let n = domain.dim();
    let len = domain.len();
    let mut gradient = vec![vec![0.0; len]; n * n];
    let mut x = vec![0.0; n];
    for a in 0..n {
        for _ in 0..3 {
            let c: f64 = rng.gen_range(-1.0..1.0);
            if domain.is_torus() {
                let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
                let phase: f64 = rng.gen_range(0.0..2.0 * PI);
                for p in 0..len {
                    domain.coord(p, &mut x);
                    let arg = 2.0 * PI * k.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + phase;
                    for i in 0..n {
                        gradient[i * n + a][p] -= c * 2.0 * PI * k[i] * libm::sin(arg);
                    }
                }
            } else {
                let k: Vec<f64> = (0..n).map(|_| rng.gen_range(1i32..=3) as f64).collect();
                for p in 0..len {
                    domain.coord(p, &mut x);
                    let s: Vec<f64> = (0..n).map(|d| libm::sin(PI * k[d] * x[d])).collect();
                    for i in 0..n {
                        let mut g = c * PI * k[i] * libm::cos(PI * k[i] * x[i]);
                        for d in (0..n).filter(|&d| d != i) {
                            g *= s[d];
                        }
                        gradient[i * n + a][p] += g;
                    }
                }
            }
        }
    }
    let mut divergence = vec![0.0; len];
    for a in 0..n {
        divergence.iter_mut().zip(&gradient[a * n + a]).for_each(|(o, v)| *o += v);
    }
    TestField { gradient, divergence }
}

fn pair(domain: &Domain, f: &[Vec<f64>], g: &[Vec<f64>]) -> f64 {
    f.iter().zip(g).map(|(a, b)| domain.integrate(&a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>())).sum()
}

/// Expand `u_ε` around `u₀`: corrector, remainders, residual norms and checks.
pub fn expand(
    cells: &CorrectorSet,
    eps: f64,
    fine: &FineSolution,
    homogenized: &FineSolution,
    opts: &ExpansionOptions,
) -> Result<ExpansionBundle> {
    let domain = fine.domain;
    if homogenized.domain != domain {
        return Err(Error::GridMismatch);
    }
    let n = domain.dim();
    let ctx = ExpansionContext::new(cells, eps, homogenized, opts)?;
    let corrector = ctx.corrector()?;
    let len = domain.len();

    let diff: Vec<Vec<f64>> =
        (0..n).map(|b| fine.velocity[b].iter().zip(&homogenized.velocity[b]).map(|(x, y)| x - y).collect()).collect();
    let w: Vec<Vec<f64>> =
        (0..n).map(|b| diff[b].iter().zip(&corrector.values[b]).map(|(x, y)| x + y).collect()).collect();
    let mut grad_w = vec![Vec::new(); n * n];
    for b in 0..n {
        for (h, d) in domain.gradient(&diff[b]).into_iter().enumerate() {
            grad_w[b * n + h] = d.iter().zip(&corrector.gradient[b * n + h]).map(|(x, y)| x + y).collect();
        }
    }

    let pi_raw = ctx.pi_tilde()?;
    let pi_tilde = centered(&domain, &pi_raw);
    let flux = ctx.flux_terms()?;
    let disc = ctx.discrepancy_terms()?;
    let [h1, h3, h4] = ctx.local_residuals(&corrector);

    let dp: Vec<f64> = fine.pressure.iter().zip(&homogenized.pressure).map(|(a, b)| a - b).collect();
    let mut p_sum = vec![0.0; len];
    for p in &flux.pressure {
        p_sum.iter_mut().zip(p).for_each(|(o, v)| *o += v);
    }
    let mut t_total = vec![0.0; len];
    for t in &flux.t {
        t_total.iter_mut().zip(t).for_each(|(o, v)| *o += v);
    }
    let z: Vec<f64> = dp.iter().zip(&p_sum).map(|(a, b)| a + b).collect();

    // checks
    let div_phi_discrete = discrete_divergence(&domain, &corrector.values);
    let div_diff = {
        let f = fine.divergence();
        let h = homogenized.divergence();
        f.iter().zip(&h).map(|(a, b)| a - b).collect::<Vec<_>>()
    };
    let div_w: Vec<f64> = div_diff.iter().zip(&div_phi_discrete).map(|(a, b)| a + b).collect();
    let gap: Vec<f64> = (0..len).map(|p| div_w[p] - div_phi_discrete[p] - div_diff[p]).collect();
    let div_phi_norm = domain.l2_norm(&div_phi_discrete, None);
    let divergence_identity = relative(domain.l2_norm(&gap, None), div_phi_norm);
    let compatibility = domain.integrate(&div_phi_discrete).abs();

    let route_gap: Vec<f64> = (0..len).map(|p| p_sum[p] - pi_raw[p] - t_total[p]).collect();
    let pressure_scale = domain.l2_norm(&pi_raw, None).max(domain.l2_norm(&dp, None));
    let pressure_identity = relative(domain.l2_norm(&route_gap, None), pressure_scale);

    let lhs = ctx.flux_of_corrector(&corrector);
    let mut rhs = h1.clone();
    for d in &disc {
        sum_into(&mut rhs, d);
    }
    sum_into(&mut rhs, &h3);
    sum_into(&mut rhs, &h4);
    let id_gap: Vec<Vec<f64>> =
        lhs.iter().zip(&rhs).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
    let gradient_identity = relative(l2_norm(&domain, &id_gap, None), l2_norm(&domain, &lhs, None));

    // cell modes alias on the solution grid, so the weak pairing runs on a finer one
    let check_ctx = if opts.check_oversampling > 1 { Some(ctx.refined(opts.check_oversampling)?) } else { None };
    let (check_domain, check_flux, check_disc) = match &check_ctx {
        Some(c) => (c.domain, c.flux_terms()?, c.discrepancy_terms()?),
        None => (domain, flux.clone(), disc.clone()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut weak_form = [0.0f64; 3];
    for _ in 0..opts.test_fields {
        let tf = test_field(&check_domain, &mut rng);
        let grad_norm = l2_norm(&check_domain, &tf.gradient, None);
        for m in 0..3 {
            let left = pair(&check_domain, &check_disc[m], &tf.gradient);
            let right = pair(&check_domain, &check_flux.h2[m], &tf.gradient)
                + check_domain.integrate(&mul(&check_flux.pressure[m], &tf.divergence));
            let scale = l2_norm(&check_domain, &check_disc[m], None) * grad_norm;
            weak_form[m] = weak_form[m].max(relative((left - right).abs(), scale));
        }
    }

    // norms
    let mut h2_sum = flux.h2[0].clone();
    sum_into(&mut h2_sum, &flux.h2[1]);
    sum_into(&mut h2_sum, &flux.h2[2]);
    let nrm = |f: &[Vec<f64>]| l2_norm(&domain, f, None);
    let residual_norms = ResidualNorms {
        h1: nrm(&h1),
        h21: nrm(&flux.h2[0]),
        h22: nrm(&flux.h2[1]),
        h23: nrm(&flux.h2[2]),
        h3: nrm(&h3),
        h4: nrm(&h4),
        j1: domain.l2_norm(&corrector.j_terms[0], None),
        j2: domain.l2_norm(&corrector.j_terms[1], None),
        j3: domain.l2_norm(&corrector.j_terms[2], None),
        h2_sum: nrm(&h2_sum),
    };

    let mut hess = Vec::with_capacity(n * n * n);
    for g in &ctx.grad_u0 {
        hess.extend(domain.gradient(g));
    }
    let layer = (!domain.is_torus()).then(|| layer_mask(&domain, 5.0 * eps));
    let data = DataScales {
        grad_u0: nrm(&ctx.grad_u0),
        hessian_u0: nrm(&hess),
        grad_u0_layer: layer.as_deref().map_or(0.0, |m| l2_norm(&domain, &ctx.grad_u0, Some(m))),
    };

    let err_u_l2 = nrm(&diff);
    let err_w_h1 = libm::hypot(nrm(&w), nrm(&grad_w));
    let p_err: Vec<f64> = dp.iter().zip(&pi_raw).map(|(a, b)| a + b).collect();
    let err_p_l2 = domain.l2_norm(&centered(&domain, &p_err), None);
    let z_oscillation = domain.l2_norm(&centered(&domain, &z), None);
    let t_sum = domain.l2_norm(&t_total, None);
    let div_phi = domain.l2_norm(&corrector.divergence(), None);

    Ok(ExpansionBundle {
        eps,
        w,
        pi_tilde,
        z,
        residual_norms,
        data,
        checks: ExpansionChecks { divergence_identity, compatibility, pressure_identity, gradient_identity, weak_form },
        err_u_l2,
        err_w_h1,
        err_p_l2,
        z_oscillation,
        t_sum,
        div_phi,
        corrector,
    })
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn relative(num: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        num / scale
    } else {
        num
    }
}

/// Largest relative gap between residual norms evaluated through the
/// spectral fold and through pointwise trigonometric sums.
pub fn scale_separation_defect(
    cells: &CorrectorSet,
    eps: f64,
    fine: &FineSolution,
    homogenized: &FineSolution,
    opts: &ExpansionOptions,
) -> Result<f64> {
    let mut a = opts.clone();
    a.route = EvalRoute::Auto;
    let mut b = opts.clone();
    b.route = EvalRoute::Pointwise;
    let ra = expand(cells, eps, fine, homogenized, &a)?.residual_norms;
    let rb = expand(cells, eps, fine, homogenized, &b)?.residual_norms;
    let scale = ra.entries().iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(ra
        .entries()
        .iter()
        .zip(rb.entries().iter())
        .map(|(x, y)| relative((x.1 - y.1).abs(), scale))
        .fold(0.0, f64::max))
}
