use alloc::vec::Vec;

use crate::fields::Domain;

/// Discrete norms of a (multi-component) macroscopic field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldNorms {
    pub l2: f64,
    pub h1_seminorm: f64,
    /// `L²` over the masked nodes, usually `Ω ∖ Σ_r`.
    pub boundary_layer: f64,
}

impl FieldNorms {
    pub fn h1(&self) -> f64 {
        libm::hypot(self.l2, self.h1_seminorm)
    }
}

/// Nodes of `Ω ∖ Σ_r`.
pub fn layer_mask(domain: &Domain, r: f64) -> Vec<bool> {
    (0..domain.len()).map(|k| !domain.in_inner_region(k, r)).collect()
}

pub fn l2_norm(domain: &Domain, comps: &[Vec<f64>], mask: Option<&[bool]>) -> f64 {
    libm::sqrt(comps.iter().map(|c| libm::pow(domain.l2_norm(c, mask), 2.0)).sum::<f64>())
}

/// `‖∇f‖_{L²}` with the domain's differentiation rule.
pub fn h1_seminorm(domain: &Domain, comps: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for c in comps {
        for g in domain.gradient(c) {
            s += libm::pow(domain.l2_norm(&g, None), 2.0);
        }
    }
    libm::sqrt(s)
}

pub fn norms(domain: &Domain, comps: &[Vec<f64>], layer: Option<&[bool]>) -> FieldNorms {
    FieldNorms {
        l2: l2_norm(domain, comps, None),
        h1_seminorm: h1_seminorm(domain, comps),
        boundary_layer: layer.map_or(0.0, |m| l2_norm(domain, comps, Some(m))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn closed_forms_on_the_torus() {
        let d = Domain::torus(2, 32).unwrap();
        let one = vec![vec![1.0; d.len()]];
        assert!((norms(&d, &one, None).l2 - 1.0).abs() < 1e-14);
        let s = vec![(0..d.len()).map(|k| libm::sin(2.0 * PI * d.coords(k)[0])).collect::<Vec<_>>()];
        let nm = norms(&d, &s, None);
        assert!((nm.l2 - 1.0 / libm::sqrt(2.0)).abs() < 1e-14);
        assert!((nm.h1_seminorm - 2.0 * PI / libm::sqrt(2.0)).abs() < 1e-12);
    }

    #[test]
    fn layer_of_the_square() {
        let d = Domain::square(16).unwrap();
        let m = layer_mask(&d, 0.125);
        // two rings of cells on each side lie within 1/8 of the boundary
        assert_eq!(m.iter().filter(|&&b| !b).count(), 12 * 12);
        let one = vec![vec![1.0; d.len()]];
        let nm = norms(&d, &one, Some(&m));
        assert!((nm.boundary_layer - libm::sqrt(1.0 - 0.75 * 0.75)).abs() < 1e-14);
    }
}
