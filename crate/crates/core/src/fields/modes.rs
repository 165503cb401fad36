use alloc::vec::Vec;
use core::f64::consts::PI;

/// `amplitude · cos(2π w·x + phase)` added to one component.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub component: usize,
    pub amplitude: f64,
    pub wave: Vec<f64>,
    pub phase: f64,
}

/// Analytic vector field given as a finite sum of plane waves.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ModeSum {
    pub components: usize,
    pub modes: Vec<Mode>,
}

impl ModeSum {
    pub fn new(components: usize) -> Self {
        ModeSum { components, modes: Vec::new() }
    }

    pub fn with(mut self, component: usize, amplitude: f64, wave: &[f64], phase: f64) -> Self {
        self.modes.push(Mode { component, amplitude, wave: wave.to_vec(), phase });
        self
    }

    fn angle(m: &Mode, x: &[f64]) -> f64 {
        2.0 * PI * m.wave.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + m.phase
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for m in &self.modes {
            out[m.component] += m.amplitude * libm::cos(Self::angle(m, x));
        }
    }

    pub fn component(&self, c: usize, x: &[f64]) -> f64 {
        self.modes.iter().filter(|m| m.component == c).map(|m| m.amplitude * libm::cos(Self::angle(m, x))).sum()
    }

    /// `∂_d` of component `c`.
    pub fn derivative(&self, c: usize, d: usize, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.component == c)
            .map(|m| -m.amplitude * 2.0 * PI * m.wave[d] * libm::sin(Self::angle(m, x)))
            .sum()
    }

    /// `Σ_d ∂_d f^d`.
    pub fn divergence(&self, x: &[f64]) -> f64 {
        (0..self.components).map(|d| self.derivative(d, d, x)).sum()
    }

    /// Every wave vector is integral, so the field lives on the torus.
    pub fn is_periodic(&self) -> bool {
        self.modes.iter().all(|m| m.wave.iter().all(|w| libm::trunc(*w) == *w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let f = ModeSum::new(2).with(0, 1.5, &[1.0, 2.0], 0.3).with(1, -0.5, &[0.5, 0.0], 0.0);
        let x = [0.31, 0.77];
        let h = 1e-6;
        for c in 0..2 {
            for d in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let fd = (f.component(c, &xp) - f.component(c, &xm)) / (2.0 * h);
                assert!((fd - f.derivative(c, d, &x)).abs() < 1e-7);
            }
        }
        assert!(!f.is_periodic());
    }
}
