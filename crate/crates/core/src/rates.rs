//! Least-squares convergence rates.

use crate::{Error, Result};

/// Fit of `log e = slope · log ε + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

/// Fit `e ≈ C ε^slope` through `(ε, e)` pairs. Needs three or more points with positive `ε` and `e`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 || points.iter().any(|&(eps, e)| !(e > 0.0) || !(eps > 0.0)) {
        return Err(Error::DegenerateData);
    }
    let m = points.len() as f64;
    let xs = points.iter().map(|p| libm::log(p.0));
    let ys = points.iter().map(|p| libm::log(p.1));
    let mx = xs.clone().sum::<f64>() / m;
    let my = ys.clone().sum::<f64>() / m;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.clone().zip(ys.clone()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateData);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = xs.zip(ys).map(|(x, y)| libm::pow(y - slope * x - intercept, 2.0)).sum::<f64>();
    Ok(RateFit { slope, intercept, residual: libm::sqrt(ss / m) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS: [f64; 5] = [0.5, 1.0 / 3.0, 0.25, 0.2, 1.0 / 6.0];

    #[test]
    fn exact_powers() {
        let lin: Vec<_> = EPS.iter().map(|&e| (e, e)).collect();
        let f = fit_rate(&lin).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && f.intercept.abs() < 1e-12 && f.residual < 1e-12);
        let half: Vec<_> = EPS.iter().map(|&e| (e, libm::sqrt(e))).collect();
        assert!((fit_rate(&half).unwrap().slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pts: Vec<_> =
                EPS.iter().map(|&e| (e, 3.0 * libm::pow(e, 1.2) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))).collect();
            let f = fit_rate(&pts).unwrap();
            assert!((f.slope - 1.2).abs() < 0.05, "{f:?}");
            assert!((libm::exp(f.intercept) - 3.0).abs() < 0.1);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(fit_rate(&[(0.5, 1.0), (0.25, 0.5)]), Err(Error::DegenerateData));
        assert_eq!(fit_rate(&[(0.5, 1.0), (0.25, 0.0), (0.125, 0.1)]), Err(Error::DegenerateData));
        assert_eq!(fit_rate(&[(0.5, 1.0), (0.5, 0.9), (0.5, 0.8)]), Err(Error::DegenerateData));
    }
}
