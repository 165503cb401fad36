//! One experiment: cell problems once, then every ε case on a worker pool.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use rshom_core::expansion::{expand, CorrectorSet, ExpansionBundle, ExpansionChecks, ExpansionOptions, ResidualNorms};
use rshom_core::fields::EllipticityReport;
use rshom_core::finesolve::{solve_homogenized, solve_reiterated, DomainSpec, FineSolution};
use rshom_core::rates::{fit_rate, RateFit};
use rshom_core::smoothing::{EvalRoute, Mollifier};

use crate::config::{DomainChoice, ExperimentConfig};
use crate::dump::dump_fields;
use crate::error::HarnessError;

/// Measurements at one `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseRow {
    pub eps: f64,
    pub points: usize,
    pub err_u_l2: f64,
    pub err_w_h1: f64,
    pub err_p_l2: f64,
    pub residual_norms: ResidualNorms,
    pub checks: ExpansionChecks,
    pub z_oscillation: f64,
    pub t_sum: f64,
    pub div_phi: f64,
    /// Fitted constants of the remainder, flux-residual and divergence bounds.
    pub remainder_constant: f64,
    pub flux_constant: f64,
    pub divergence_constant: f64,
    /// Relative residuals reached by the oscillating and homogenized solvers.
    pub fine_residual: f64,
    pub homogenized_residual: f64,
    pub walltime_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub y_points: usize,
    pub z_points: usize,
    pub a_hat: Vec<f64>,
    pub a_hat_table: String,
    pub coefficient_ellipticity: EllipticityReport,
    pub effective_ellipticity: EllipticityReport,
    /// Spectral mass the flux correctors could not represent, per family.
    pub flux_unresolved: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SlopeOutcome {
    Fitted(RateFit),
    /// Some error is at or below the zero threshold.
    ZeroError,
    TooFewPoints,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Slope {
    pub quantity: &'static str,
    pub outcome: SlopeOutcome,
    pub threshold: Option<f64>,
}

impl Slope {
    pub fn passes(&self) -> bool {
        match (self.outcome, self.threshold) {
            (SlopeOutcome::Fitted(f), Some(t)) => f.slope >= t,
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl CheckOutcome {
    fn at_most(name: String, value: f64, limit: f64) -> Self {
        CheckOutcome { name, value, limit, pass: value <= limit }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    pub version: &'static str,
    pub workers: usize,
    pub os: &'static str,
    pub arch: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub name: String,
    pub domain: DomainChoice,
    pub cells: Option<CellSummary>,
    /// Completed cases, in sweep order.
    pub rows: Vec<CaseRow>,
    pub slopes: Vec<Slope>,
    pub checks: Vec<CheckOutcome>,
    pub environment: Environment,
    pub failure: Option<String>,
}

impl RateReport {
    /// Every check and slope threshold passed and nothing failed.
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.checks.iter().all(|c| c.pass) && self.slopes.iter().all(Slope::passes)
    }
}

pub struct RunOutcome {
    pub report: RateReport,
    pub error: Option<HarnessError>,
}

fn stage(stage: &'static str, eps: Option<f64>) -> impl Fn(rshom_core::Error) -> HarnessError {
    move |source| HarnessError::Stage { stage, eps, source }
}

pub fn build_cells(cfg: &ExperimentConfig) -> Result<CorrectorSet, HarnessError> {
    let spec = cfg.coefficient_spec()?;
    let (gy, gz) = cfg.cell_grids()?;
    CorrectorSet::build_seeded(&spec, gy, gz, cfg.solver_options(), cfg.seed).map_err(stage("cell problems", None))
}

fn summarize(cfg: &ExperimentConfig, cells: &CorrectorSet) -> CellSummary {
    CellSummary {
        y_points: cfg.grids.y_points,
        z_points: cfg.grids.z_points,
        a_hat: cells.effective.a_hat.clone(),
        a_hat_table: cells.effective.to_table(),
        coefficient_ellipticity: cells.coefficient.report,
        effective_ellipticity: cells.effective.report,
        flux_unresolved: [cells.flux[0].unresolved, cells.flux[1].unresolved, cells.flux[2].unresolved],
    }
}

/// Oscillating and homogenized solves at one `ε`.
pub fn solve_case(
    cfg: &ExperimentConfig,
    cells: &CorrectorSet,
    eps: f64,
) -> Result<(FineSolution, FineSolution), HarnessError> {
    let spec = cfg.coefficient_spec()?;
    let domain = cfg.domain_for(eps)?;
    let forcing = cfg.forcing();
    let f = move |x: &[f64], out: &mut [f64]| forcing.eval(x, out);
    let boundary = cfg.boundary();
    let g = move |x: &[f64], out: &mut [f64]| match &boundary {
        Some(b) => b.eval(x, out),
        None => out.iter_mut().for_each(|v| *v = 0.0),
    };
    let mut problem = DomainSpec::new(domain, &f);
    if cfg.domain.kind == DomainChoice::Square {
        problem = problem.with_boundary(&g);
    }
    let opts = cfg.solver_options();
    let fine = solve_reiterated(&spec, eps, &problem, opts).map_err(stage("oscillating solve", Some(eps)))?;
    let homog = solve_homogenized(&cells.effective, &problem, opts).map_err(stage("homogenized solve", Some(eps)))?;
    Ok((fine, homog))
}

pub fn expansion_options(cfg: &ExperimentConfig) -> ExpansionOptions {
    ExpansionOptions {
        cutoff_multiple: cfg.expansion.cutoff_multiple,
        route: EvalRoute::Auto,
        mollifier: Mollifier::standard(cfg.coefficient.dim),
        test_fields: cfg.expansion.test_fields,
        check_oversampling: cfg.expansion.check_oversampling,
        seed: cfg.seed,
    }
}

fn run_case(
    cfg: &ExperimentConfig,
    cells: &CorrectorSet,
    index: usize,
    eps: f64,
    dump: Option<&Path>,
) -> Result<CaseRow, HarnessError> {
    let start = Instant::now();
    let (fine, homog) = solve_case(cfg, cells, eps)?;
    let b: ExpansionBundle =
        expand(cells, eps, &fine, &homog, &expansion_options(cfg)).map_err(stage("expansion", Some(eps)))?;
    if let Some(dir) = dump {
        dump_fields(dir, index, cfg.domain.kind, &fine, &homog, &b)?;
    }
    Ok(CaseRow {
        eps,
        points: fine.domain.points(),
        err_u_l2: b.err_u_l2,
        err_w_h1: b.err_w_h1,
        err_p_l2: b.err_p_l2,
        residual_norms: b.residual_norms,
        checks: b.checks,
        z_oscillation: b.z_oscillation,
        t_sum: b.t_sum,
        div_phi: b.div_phi,
        remainder_constant: b.remainder_constant(),
        flux_constant: b.flux_residual_constant(),
        divergence_constant: b.divergence_constant(),
        fine_residual: fine.report.residual,
        homogenized_residual: homog.report.residual,
        walltime_s: start.elapsed().as_secs_f64(),
    })
}

fn slope(
    rows: &[CaseRow],
    quantity: &'static str,
    zero: f64,
    threshold: Option<f64>,
    get: fn(&CaseRow) -> f64,
) -> Slope {
    let outcome = if rows.len() < 3 {
        SlopeOutcome::TooFewPoints
    } else if rows.iter().any(|r| get(r) <= zero) {
        SlopeOutcome::ZeroError
    } else {
        match fit_rate(&rows.iter().map(|r| (r.eps, get(r))).collect::<Vec<_>>()) {
            Ok(f) => SlopeOutcome::Fitted(f),
            Err(_) => SlopeOutcome::ZeroError,
        }
    };
    Slope { quantity, outcome, threshold }
}

/// `max/min` of positive constants; `None` when every constant vanishes.
pub fn spread(values: &[f64]) -> Option<f64> {
    let hi = values.iter().cloned().fold(0.0, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi <= 0.0 || values.is_empty() {
        return None;
    }
    Some(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

fn row_checks(cfg: &ExperimentConfig, r: &CaseRow) -> Vec<CheckOutcome> {
    let t = &cfg.thresholds;
    let tag = |what: &str| format!("eps={} {what}", r.eps);
    let mut out = vec![
        CheckOutcome::at_most(tag("oscillating solver residual"), r.fine_residual, t.solver_residual),
        CheckOutcome::at_most(tag("homogenized solver residual"), r.homogenized_residual, t.solver_residual),
        CheckOutcome::at_most(tag("divergence identity"), r.checks.divergence_identity, t.divergence_identity),
        CheckOutcome::at_most(tag("compatibility"), r.checks.compatibility, t.compatibility),
        CheckOutcome::at_most(tag("pressure identity"), r.checks.pressure_identity, t.pressure_identity),
    ];
    for (m, v) in r.checks.weak_form.iter().enumerate() {
        out.push(CheckOutcome::at_most(tag(&format!("weak form family {}", m + 1)), *v, t.weak_form));
    }
    out
}

fn sweep_checks(cfg: &ExperimentConfig, rows: &[CaseRow]) -> Vec<CheckOutcome> {
    if rows.len() < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let families: [(&str, fn(&CaseRow) -> f64); 3] = [
        ("remainder constant spread", |r| r.remainder_constant),
        ("flux residual constant spread", |r| r.flux_constant),
        ("divergence constant spread", |r| r.divergence_constant),
    ];
    for (name, get) in families {
        let v: Vec<f64> = rows.iter().map(get).collect();
        let s = spread(&v).unwrap_or(1.0);
        out.push(CheckOutcome::at_most(name.to_string(), s, cfg.thresholds.constant_spread));
    }
    out
}

pub fn finish_report(
    cfg: &ExperimentConfig,
    cells: Option<CellSummary>,
    rows: Vec<CaseRow>,
    failure: Option<String>,
) -> RateReport {
    let t = &cfg.thresholds;
    let z = t.zero_error;
    let slopes = vec![
        slope(&rows, "err_u_L2", z, Some(t.velocity_slope), |r| r.err_u_l2),
        slope(&rows, "err_w_H1", z, Some(t.corrected_slope), |r| r.err_w_h1),
        slope(&rows, "err_p_L2", z, Some(t.pressure_slope), |r| r.err_p_l2),
        slope(&rows, "T_sum_L2", z, Some(t.pressure_slope), |r| r.t_sum),
        slope(&rows, "div_phi_L2", z, None, |r| r.div_phi),
        slope(&rows, "h21_23_norm", z, None, |r| r.residual_norms.h2_sum),
    ];
    let mut checks: Vec<CheckOutcome> = rows.iter().flat_map(|r| row_checks(cfg, r)).collect();
    checks.extend(sweep_checks(cfg, &rows));
    RateReport {
        name: cfg.name.clone(),
        domain: cfg.domain.kind,
        cells,
        rows,
        slopes,
        checks,
        environment: Environment {
            version: env!("CARGO_PKG_VERSION"),
            workers: rayon::current_num_threads(),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
        },
        failure,
    }
}

/// Run the sweep. Cases that completed are kept even when another one fails.
pub fn run_experiment(cfg: &ExperimentConfig, dump: Option<&Path>) -> RunOutcome {
    let cells = match build_cells(cfg) {
        Ok(c) => c,
        Err(e) => {
            return RunOutcome { report: finish_report(cfg, None, Vec::new(), Some(e.to_string())), error: Some(e) };
        }
    };
    let summary = summarize(cfg, &cells);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().expect("thread pool");
    let results: Vec<Result<CaseRow, HarnessError>> =
        pool.install(|| cfg.eps.par_iter().enumerate().map(|(k, &eps)| run_case(cfg, &cells, k, eps, dump)).collect());
    let mut rows = Vec::new();
    let mut error = None;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) if error.is_none() => error = Some(e),
            Err(_) => {}
        }
    }
    let mut report = finish_report(cfg, Some(summary), rows, error.as_ref().map(|e| e.to_string()));
    report.environment.workers = pool.current_num_threads();
    RunOutcome { report, error }
}
