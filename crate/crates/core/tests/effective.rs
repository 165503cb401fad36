use std::f64::consts::PI;

use rshom_core::cellsolve::{assemble_mesoscale, solve_fast_family, solve_slow_cell, SolverOptions};
use rshom_core::effective::{
    assemble_effective, build_flux_correctors, build_two_scale_flux, compute_i1, compute_i2, compute_i3, flux_on_cell,
    relative_difference, slow_gradients, FluxFamily,
};
use rshom_core::fields::index::{chi, e5, pi, q3, t4};
use rshom_core::fields::{CoefficientSpec, CoefficientTerm, PeriodicGrid, Spectral, TwoScaleCoefficient};
use rshom_core::Error;
use rshom_oracles::{laminate_effective, stream_function_effective};

fn iso(scale: f64, wy: [i64; 2], wz: [i64; 2], phase: f64) -> CoefficientTerm {
    CoefficientTerm::isotropic(2, scale, &wy, &wz, phase)
}

fn two_scale_spec() -> CoefficientSpec {
    CoefficientSpec::new(
        2,
        0.4,
        vec![
            iso(1.0, [0, 0], [0, 0], 0.0),
            iso(0.15, [1, 0], [0, -1], 0.0),
            iso(-0.15, [1, 0], [0, 1], 0.0),
            iso(0.15, [0, 1], [1, 0], 0.0),
            iso(0.15, [0, 1], [-1, 0], 0.0),
        ],
    )
    .unwrap()
}

/// Anisotropic symmetric coefficient depending on one variable only.
fn one_scale_spec(on_y: bool) -> CoefficientSpec {
    let w = |a: i64, b: i64| if on_y { ([a, b], [0, 0]) } else { ([0, 0], [a, b]) };
    let mut terms = vec![iso(1.0, [0, 0], [0, 0], 0.0)];
    let (wy, wz) = w(1, 0);
    terms.push(iso(0.3, wy, wz, 0.4));
    let (wy, wz) = w(1, 2);
    terms.push(iso(0.2, wy, wz, -1.1));
    let mut shear = vec![0.0; 16];
    shear[t4(2, 0, 1, 0, 1)] = 0.1;
    shear[t4(2, 1, 0, 1, 0)] = 0.1;
    shear[t4(2, 0, 0, 0, 0)] = 0.1;
    let (wy, wz) = w(0, 1);
    terms.push(CoefficientTerm { amplitude: shear, wave_y: wy.to_vec(), wave_z: wz.to_vec(), phase: 0.0 });
    CoefficientSpec::new(2, 0.3, terms).unwrap()
}

struct Pipeline {
    a: TwoScaleCoefficient,
    fast: rshom_core::cellsolve::FastCorrectorFamily,
    a2: rshom_core::cellsolve::MesoscaleCoefficient,
    slow: rshom_core::cellsolve::SlowCorrectorFamily,
}

fn pipeline(spec: &CoefficientSpec, ny: usize, nz: usize) -> Pipeline {
    pipeline_with(spec, ny, nz, SolverOptions::default())
}

fn pipeline_with(spec: &CoefficientSpec, ny: usize, nz: usize, opts: SolverOptions) -> Pipeline {
    let a = TwoScaleCoefficient::sample(spec, PeriodicGrid::new(2, ny).unwrap(), PeriodicGrid::new(2, nz).unwrap())
        .unwrap();
    let fast = solve_fast_family(&a, opts).unwrap();
    let a2 = assemble_mesoscale(&a, &fast).unwrap();
    let slow = solve_slow_cell(&a2, opts).unwrap();
    Pipeline { a, fast, a2, slow }
}

/// Â is linear in the corrector error, so oracle comparisons at 1e-8 need a
/// tighter solve than the default.
fn tight() -> SolverOptions {
    SolverOptions { rtol: 1e-12, ..SolverOptions::default() }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[test]
fn constant_coefficient_collapses() {
    let spec = CoefficientSpec::new(
        2,
        0.5,
        vec![CoefficientTerm {
            amplitude: {
                let mut t = vec![0.0; 16];
                for i in 0..2 {
                    for a in 0..2 {
                        t[t4(2, i, i, a, a)] = 1.3;
                    }
                }
                t[t4(2, 0, 1, 1, 0)] = 0.2;
                t
            },
            wave_y: vec![0, 0],
            wave_z: vec![0, 0],
            phase: 0.0,
        }],
    )
    .unwrap();
    let p = pipeline(&spec, 8, 8);
    let mut t = vec![0.0; 16];
    p.a.at(0, 0, &mut t);
    let ahat = assemble_effective(&p.a, &p.fast, &p.slow).unwrap();
    assert_eq!(ahat.a_hat, t);
    assert_eq!(compute_i1(&p.a, &p.fast).unwrap().max_abs(), 0.0);
    assert_eq!(compute_i3(&p.a, &p.fast, &p.slow).unwrap().max_abs(), 0.0);
    let i2 = compute_i2(&ahat.a_hat, &p.a2, &p.slow).unwrap();
    assert!(i2.fields.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn z_only_coefficient_matches_single_scale_oracle() {
    let spec = one_scale_spec(false);
    let p = pipeline_with(&spec, 4, 64, tight());
    let ahat = assemble_effective(&p.a, &p.fast, &p.slow).unwrap();
    let oracle = stream_function_effective(64, &p.a.fast_slice(0).components);
    assert!(rel(&ahat.a_hat, &oracle) <= 1e-8, "{}", rel(&ahat.a_hat, &oracle));
    // slow corrector vanishes so I₃ does too
    assert!(p.slow.chi.iter().flatten().all(|&v| v == 0.0));
    assert_eq!(compute_i3(&p.a, &p.fast, &p.slow).unwrap().max_abs(), 0.0);
}

#[test]
fn y_only_coefficient_matches_single_scale_oracle() {
    let spec = one_scale_spec(true);
    let p = pipeline_with(&spec, 64, 4, tight());
    let ahat = assemble_effective(&p.a, &p.fast, &p.slow).unwrap();
    let oracle = stream_function_effective(64, &spec.eval_diagonal(PeriodicGrid::new(2, 64).unwrap()).components);
    assert!(rel(&ahat.a_hat, &oracle) <= 1e-8, "{}", rel(&ahat.a_hat, &oracle));
}

#[test]
fn laminate_closed_form() {
    let spec =
        CoefficientSpec::new(2, 0.5, vec![iso(1.0, [0, 0], [0, 0], 0.0), iso(0.5, [0, 0], [1, 0], -PI / 2.0)]).unwrap();
    let p = pipeline(&spec, 4, 64);
    let ahat = assemble_effective(&p.a, &p.fast, &p.slow).unwrap();
    let want = laminate_effective(1.0, 0.75f64.sqrt());
    for c in 0..16 {
        assert!((ahat.a_hat[c] - want[c]).abs() < 1e-12, "{c}");
    }
}

#[test]
fn effective_tensor_is_elliptic_and_grid_stable() {
    let spec = two_scale_spec();
    let coarse = pipeline(&spec, 8, 32);
    let fine = pipeline(&spec, 8, 64);
    let a32 = assemble_effective(&coarse.a, &coarse.fast, &coarse.slow).unwrap();
    let a64 = assemble_effective(&fine.a, &fine.fast, &fine.slow).unwrap();
    assert_eq!(a64.report.samples, 10_000);
    assert!(a64.report.satisfies(spec.mu()));
    assert!(a64.report.min_rayleigh >= spec.mu() && a64.report.max_rayleigh <= 1.0 / spec.mu());
    assert!(rel(&a32.a_hat, &a64.a_hat) <= 1e-6);
    let table = a64.to_table();
    assert_eq!(table.lines().count(), 16);
}

#[test]
fn discrepancies_have_zero_cell_averages() {
    let p = pipeline(&two_scale_spec(), 8, 32);
    let ahat = assemble_effective(&p.a, &p.fast, &p.slow).unwrap();
    let i1 = compute_i1(&p.a, &p.fast).unwrap();
    let i3 = compute_i3(&p.a, &p.fast, &p.slow).unwrap();
    let scale = p.a.samples.max_abs();
    for f in [&i1, &i3] {
        for c in 0..16 {
            for y in 0..p.a.grid.y.len() {
                let s = f.slice(c, y);
                assert!((s.iter().sum::<f64>() / s.len() as f64).abs() <= 1e-9 * scale);
            }
        }
    }
    let i2 = compute_i2(&ahat.a_hat, &p.a2, &p.slow).unwrap();
    assert!(i2.measured_mean <= 1e-9 * scale);
}

#[test]
fn flux_of_zero_is_zero() {
    let g = PeriodicGrid::new(2, 16).unwrap();
    let set = build_flux_correctors(g, &vec![vec![0.0; g.len()]; 16]).unwrap();
    assert!(set.e.iter().chain(&set.q).flatten().all(|&v| v == 0.0));
}

#[test]
fn flux_of_single_mode_matches_hand_formula() {
    // I_ij^{αβ} = v_{ijαβ} cos(2π κ·z): with k = 2πκ and per (i,j,β) the vector
    // w^α = v_{ijαβ}, q = (k·w)/|k|² sin θ and
    // E_kij = (k_k f_ij − k_i f_kj) sin θ with f = (w − k(k·w)/|k|²)/|k|²
    let g = PeriodicGrid::new(2, 16).unwrap();
    let sp = Spectral::new(&g.shape());
    let kap = [2.0, -1.0];
    let k = [2.0 * PI * kap[0], 2.0 * PI * kap[1]];
    let k2 = k[0] * k[0] + k[1] * k[1];
    let v: Vec<f64> = (0..16).map(|c| ((c * 7 % 11) as f64 - 5.0) / 3.0).collect();
    let theta = |p: usize| {
        let x = g.coords(p);
        k[0] * x[0] + k[1] * x[1]
    };
    let data: Vec<Vec<f64>> = (0..16).map(|c| (0..g.len()).map(|p| v[c] * theta(p).cos()).collect()).collect();
    let cell = flux_on_cell(&sp, &data).unwrap();
    let f = |i: usize, j: usize, a: usize, b: usize| {
        let kw: f64 = (0..2).map(|al| k[al] * v[t4(2, i, j, al, b)]).sum();
        (v[t4(2, i, j, a, b)] - k[a] * kw / k2) / k2
    };
    for p in 0..g.len() {
        let s = theta(p).sin();
        for i in 0..2 {
            for j in 0..2 {
                for b in 0..2 {
                    let kw: f64 = (0..2).map(|al| k[al] * v[t4(2, i, j, al, b)]).sum();
                    assert!((cell.q[q3(2, i, j, b)][p] - kw / k2 * s).abs() < 1e-12);
                    for kk in 0..2 {
                        for a in 0..2 {
                            let want = (k[kk] * f(i, j, a, b) - k[i] * f(kk, j, a, b)) * s;
                            assert!((cell.e[e5(2, kk, i, j, a, b)][p] - want).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }
    let mut shifted = data;
    shifted[3].iter_mut().for_each(|x| *x += 1.0);
    assert!(matches!(flux_on_cell(&sp, &shifted), Err(Error::NonZeroMean { .. })));
}

#[test]
fn flux_identities_for_all_three_families() {
    for nz in [32, 64] {
        let p = pipeline(&two_scale_spec(), 8, nz);
        let i1 = compute_i1(&p.a, &p.fast).unwrap();
        let i3 = compute_i3(&p.a, &p.fast, &p.slow).unwrap();
        let f1 = build_two_scale_flux(FluxFamily::First, &i1).unwrap();
        let f3 = build_two_scale_flux(FluxFamily::Third, &i3).unwrap();
        for set in [&f1, &f3] {
            assert!(set.skew_defect() <= 1e-12);
        }
        assert!(f1.divergence_residual(&i1.components) <= 1e-9);
        assert!(f3.divergence_residual(&i3.components) <= 1e-9);

        // ∂_z q₁ reproduces the fast pressure
        let d1 = f1.pressure_divergence();
        let pi1: Vec<Vec<f64>> = (0..4).map(|c| p.fast.pi.components[c].clone()).collect();
        assert!(relative_difference(&d1, &pi1) <= 1e-9);
        // ∂_z q₃ = −π_j^γ(y,z) ∂_{y_j} χ_k^{γα}(y)
        let c = slow_gradients(&p.slow);
        let nzl = p.a.grid.z.len();
        let mut want = vec![vec![0.0; p.a.grid.len()]; 4];
        for k in 0..2 {
            for a in 0..2 {
                for y in 0..p.a.grid.y.len() {
                    for j in 0..2 {
                        for g in 0..2 {
                            let cy = c[chi(2, k, a, g) * 2 + j][y];
                            let pz = p.fast.pi.slice(pi(2, j, g), y);
                            for z in 0..nzl {
                                want[pi(2, k, a)][y * nzl + z] -= pz[z] * cy;
                            }
                        }
                    }
                }
            }
        }
        let d3 = f3.pressure_divergence();
        assert!(relative_difference(&d3, &want) <= 1e-9);
    }
    // I₂ is only band-limited up to the Y resolution, so it needs a finer Y grid
    for ny in [32, 64] {
        let p = pipeline(&two_scale_spec(), ny, 16);
        let ahat = assemble_effective(&p.a, &p.fast, &p.slow).unwrap();
        let i2 = compute_i2(&ahat.a_hat, &p.a2, &p.slow).unwrap();
        let f2 = build_flux_correctors(i2.grid, &i2.fields).unwrap();
        assert!(f2.skew_defect() <= 1e-12);
        let res = f2.divergence_residual(&i2.fields);
        assert!(res <= 1e-9, "ny {ny}: {res}");
        // ∂_y q₂ reproduces the slow pressure
        let d2 = f2.pressure_divergence();
        assert!(relative_difference(&d2, &p.slow.pi) <= 1e-9);
    }
}

#[test]
fn first_flux_corrector_is_lipschitz_in_y() {
    let mut consts = Vec::new();
    for nz in [16, 32] {
        let p = pipeline(&two_scale_spec(), 8, nz);
        let i1 = compute_i1(&p.a, &p.fast).unwrap();
        let f1 = build_two_scale_flux(FluxFamily::First, &i1).unwrap();
        let sp = Spectral::new(&p.a.grid.z.shape());
        let gy = p.a.grid.y;
        let len = p.a.grid.z.len();
        let mut worst = 0.0f64;
        for (y1, y2) in [(0usize, 1usize), (10, 19), (33, 42), (7, 63)] {
            let (c1, c2) = (gy.coords(y1), gy.coords(y2));
            let d = ((c1[0] - c2[0]).powi(2) + (c1[1] - c2[1]).powi(2)).sqrt();
            let mut h1 = 0.0;
            for e in &f1.e {
                let diff: Vec<f64> =
                    e[y1 * len..(y1 + 1) * len].iter().zip(&e[y2 * len..(y2 + 1) * len]).map(|(a, b)| a - b).collect();
                h1 += diff.iter().map(|v| v * v).sum::<f64>() / len as f64;
                for l in 0..2 {
                    h1 += sp.derivative_real(&diff, l).iter().map(|v| v * v).sum::<f64>() / len as f64;
                }
            }
            worst = worst.max(h1.sqrt() / d);
        }
        consts.push(worst);
    }
    assert!(consts[0] > 0.0 && (consts[1] / consts[0] - 1.0).abs() <= 0.2, "{consts:?}");
}

#[test]
fn second_flux_corrector_h1_norm_is_stable() {
    let mut norms = Vec::new();
    for ny in [16, 32] {
        let p = pipeline(&two_scale_spec(), ny, 16);
        let ahat = assemble_effective(&p.a, &p.fast, &p.slow).unwrap();
        let i2 = compute_i2(&ahat.a_hat, &p.a2, &p.slow).unwrap();
        let f2 = build_flux_correctors(i2.grid, &i2.fields).unwrap();
        let sp = Spectral::new(&i2.grid.shape());
        let len = i2.grid.len() as f64;
        let mut h1 = 0.0;
        for e in &f2.e {
            h1 += e.iter().map(|v| v * v).sum::<f64>() / len;
            for l in 0..2 {
                h1 += sp.derivative_real(e, l).iter().map(|v| v * v).sum::<f64>() / len;
            }
        }
        norms.push(h1.sqrt());
    }
    assert!(norms[0].is_finite() && (norms[1] / norms[0] - 1.0).abs() <= 0.2, "{norms:?}");
}
