use alloc::vec::Vec;

use super::mollifier::Mollifier;
use crate::fields::Domain;
use crate::{Error, Result};

/// `ψ_r` on the macro nodes: `1` on `Σ_{2r}`, `0` outside `Σ_r`.
#[derive(Clone, Debug)]
pub struct CutoffField {
    pub r: f64,
    pub values: Vec<f64>,
    /// Nodes of `Σ_r`.
    pub outer: Vec<bool>,
    /// Nodes of `Σ_{2r}`.
    pub inner: Vec<bool>,
    /// Measured `r · max|∇ψ_r|` (finite differences).
    pub gradient_bound: f64,
}

impl CutoffField {
    /// Worst violation of the `1 on Σ_{2r}`, `0 off Σ_r`, `[0, 1]` invariants.
    pub fn invariant_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, &v) in self.values.iter().enumerate() {
            if self.inner[k] {
                worst = worst.max((v - 1.0).abs());
            }
            if !self.outer[k] {
                worst = worst.max(v.abs());
            }
            worst = worst.max(-v).max(v - 1.0);
        }
        worst
    }
}

/// Mollify the indicator of `Σ_{3r/2}` at scale `r`. The kernel reaches at
/// most `0.45 r`, so the plateau and the zero set land where they should.
pub fn cutoff(domain: &Domain, r: f64, rho: &Mollifier) -> Result<CutoffField> {
    let h = domain.spacing();
    let len = domain.len();
    if domain.is_torus() {
        return Ok(CutoffField {
            r,
            values: alloc::vec![1.0; len],
            outer: alloc::vec![true; len],
            inner: alloc::vec![true; len],
            gradient_bound: 0.0,
        });
    }
    if !(r > 2.0 * h) {
        return Err(Error::RTooSmall { r, spacing: h });
    }
    if rho.support_radius() >= 0.5 {
        return Err(Error::InvalidInput("cutoff needs a mollifier reaching less than r/2"));
    }
    let indicator: Vec<f64> = (0..len).map(|k| if domain.in_inner_region(k, 1.5 * r) { 1.0 } else { 0.0 }).collect();
    let kernel = rho.kernel(domain, r)?;
    let mut values = kernel.apply(domain, &indicator);
    values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    let outer: Vec<bool> = (0..len).map(|k| domain.in_inner_region(k, r)).collect();
    let inner: Vec<bool> = (0..len).map(|k| domain.in_inner_region(k, 2.0 * r)).collect();
    // the plateau is a full-kernel sum, 1 up to summation round-off
    for k in 0..len {
        if inner[k] && (values[k] - 1.0).abs() < 1e-12 {
            values[k] = 1.0;
        }
    }
    let grad = domain.gradient(&values);
    let mut gmax = 0.0f64;
    for k in 0..len {
        let g2: f64 = grad.iter().map(|g| g[k] * g[k]).sum();
        gmax = gmax.max(libm::sqrt(g2));
    }
    Ok(CutoffField { r, values, outer, inner, gradient_bound: gmax * r })
}
