//! A coefficient of `x/ε²` alone is an ordinary periodic problem, so the sweep
//! can be redone with single-scale tools: the dense stream-function cell
//! solver for `â` and a closed-form Fourier solution of the homogenized
//! problem.

use std::f64::consts::PI;
use std::path::PathBuf;

use rshom::config::ExperimentConfig;
use rshom::pipeline::{build_cells, run_experiment, solve_case, SlopeOutcome};
use rshom_core::fields::index::t4;
use rshom_core::fields::{ModeSum, PeriodicGrid};
use rshom_core::finesolve::l2_norm;
use rshom_core::rates::fit_rate;
use rshom_oracles::stream_function_effective;

fn config() -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/z_only.toml");
    let mut cfg = ExperimentConfig::load(&path).unwrap();
    cfg.validate().unwrap();
    cfg.workers = 1;
    cfg
}

/// Torus solution of `−∂_i(â_ij^{αβ}∂_j u^β) + ∂_α p = f^α`, `div u = 0`, for
/// plane-wave `f`: per mode `u = Û cos θ` with
/// `Û = M⁻¹F − M⁻¹κ (κ·M⁻¹F)/(κ·M⁻¹κ)`, `M_αβ = â_ij^{αβ} κ_i κ_j`.
fn homogenized_velocity(a_hat: &[f64], f: &ModeSum, x: &[f64]) -> [f64; 2] {
    let mut u = [0.0; 2];
    for m in &f.modes {
        let k = [2.0 * PI * m.wave[0], 2.0 * PI * m.wave[1]];
        let mut mm = [[0.0; 2]; 2];
        for (a, row) in mm.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        *v += a_hat[t4(2, i, j, a, b)] * k[i] * k[j];
                    }
                }
            }
        }
        let det = mm[0][0] * mm[1][1] - mm[0][1] * mm[1][0];
        let solve =
            |r: [f64; 2]| [(mm[1][1] * r[0] - mm[0][1] * r[1]) / det, (mm[0][0] * r[1] - mm[1][0] * r[0]) / det];
        let mut rhs = [0.0; 2];
        rhs[m.component] = m.amplitude;
        let mf = solve(rhs);
        let mk = solve(k);
        let t = (k[0] * mf[0] + k[1] * mf[1]) / (k[0] * mk[0] + k[1] * mk[1]);
        let c = (2.0 * PI * (m.wave[0] * x[0] + m.wave[1] * x[1]) + m.phase).cos();
        for a in 0..2 {
            u[a] += (mf[a] - mk[a] * t) * c;
        }
    }
    u
}

#[test]
fn fast_only_sweep_matches_single_scale_pipeline() {
    let cfg = config();
    let outcome = run_experiment(&cfg, None);
    assert!(outcome.error.is_none());
    let harness = match outcome.report.slopes.iter().find(|s| s.quantity == "err_u_L2").unwrap().outcome {
        SlopeOutcome::Fitted(f) => f.slope,
        other => panic!("{other:?}"),
    };

    let spec = cfg.coefficient_spec().unwrap();
    let cell = spec.eval_diagonal(PeriodicGrid::new(2, 64).unwrap());
    let a_hat = stream_function_effective(64, &cell.components);
    let cells = build_cells(&cfg).unwrap();
    let forcing = cfg.forcing();
    let mut errors = Vec::new();
    for &eps in &cfg.eps {
        let (fine, _) = solve_case(&cfg, &cells, eps).unwrap();
        let d = fine.domain;
        let mut diff = vec![vec![0.0; d.len()]; 2];
        for p in 0..d.len() {
            let u0 = homogenized_velocity(&a_hat, &forcing, &d.coords(p));
            for a in 0..2 {
                diff[a][p] = fine.velocity[a][p] - u0[a];
            }
        }
        errors.push((eps, l2_norm(&d, &diff, None)));
    }
    let single = fit_rate(&errors).unwrap().slope;
    assert!((harness - single).abs() <= 0.15, "harness {harness}, single-scale {single}");
}
