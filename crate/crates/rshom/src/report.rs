//! `rates.csv` and `report.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::HarnessError;
use crate::pipeline::{RateReport, SlopeOutcome};

pub const CSV_HEADER: &str = "eps,err_u_L2,err_w_H1,err_p_L2,h1_norm,h21_23_norm,walltime_s";

/// The CSV body. Wall times are written only when `timings` is set, as they
/// would otherwise break byte-for-byte reproducibility.
pub fn rates_csv(report: &RateReport, timings: bool) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &report.rows {
        let wall = if timings { format!("{:.3}", r.walltime_s) } else { "0".into() };
        writeln!(
            s,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{wall}",
            r.eps, r.err_u_l2, r.err_w_h1, r.err_p_l2, r.residual_norms.h1, r.residual_norms.h2_sum
        )
        .unwrap();
    }
    s
}

pub fn report_text(report: &RateReport) -> String {
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "experiment: {}", report.name).unwrap();
    writeln!(w, "domain: {:?}", report.domain).unwrap();
    let e = &report.environment;
    writeln!(w, "rshom {} on {}-{}, {} workers", e.version, e.os, e.arch, e.workers).unwrap();
    if let Some(c) = &report.cells {
        writeln!(w, "\ncell grids: Y {} x Z {} points per axis", c.y_points, c.z_points).unwrap();
        let r = &c.coefficient_ellipticity;
        writeln!(w, "coefficient symmetric-part spectrum: [{:.6e}, {:.6e}]", r.min_eig, r.max_eig).unwrap();
        let r = &c.effective_ellipticity;
        writeln!(
            w,
            "effective tensor: {} random xi give Rayleigh quotients in [{:.6e}, {:.6e}]",
            r.samples, r.min_rayleigh, r.max_rayleigh
        )
        .unwrap();
        writeln!(
            w,
            "flux corrector unresolved mass: {:.3e} {:.3e} {:.3e}",
            c.flux_unresolved[0], c.flux_unresolved[1], c.flux_unresolved[2]
        )
        .unwrap();
        writeln!(w, "\neffective tensor (i j alpha beta value):").unwrap();
        w.push_str(&c.a_hat_table);
        if !c.a_hat_table.ends_with('\n') {
            w.push('\n');
        }
    }
    writeln!(w, "\ncases:").unwrap();
    for r in &report.rows {
        writeln!(
            w,
            "  eps={:.6} points={} u_L2={:.6e} w_H1={:.6e} p_L2={:.6e} z_osc={:.6e} solver residuals {:.2e}/{:.2e} wall {:.2}s",
            r.eps, r.points, r.err_u_l2, r.err_w_h1, r.err_p_l2, r.z_oscillation, r.fine_residual, r.homogenized_residual, r.walltime_s
        )
        .unwrap();
        let norms: Vec<String> = r.residual_norms.entries().iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        writeln!(w, "    residuals: {}", norms.join(" ")).unwrap();
        writeln!(
            w,
            "    constants: remainder={:.4e} flux={:.4e} divergence={:.4e}; gradient identity gap {:.2e}",
            r.remainder_constant, r.flux_constant, r.divergence_constant, r.checks.gradient_identity
        )
        .unwrap();
    }
    writeln!(w, "\nslopes:").unwrap();
    for sl in &report.slopes {
        let verdict = match (sl.threshold, sl.passes()) {
            (None, _) => String::new(),
            (Some(t), true) => format!(" (>= {t}: PASS)"),
            (Some(t), false) => format!(" (>= {t}: FAIL)"),
        };
        match sl.outcome {
            SlopeOutcome::Fitted(f) => writeln!(
                w,
                "  {}: slope {:.4} intercept {:.4} residual {:.3e}{verdict}",
                sl.quantity, f.slope, f.intercept, f.residual
            ),
            SlopeOutcome::ZeroError => writeln!(w, "  {}: degenerate (zero error)", sl.quantity),
            SlopeOutcome::TooFewPoints => writeln!(w, "  {}: not fitted (fewer than 3 eps)", sl.quantity),
        }
        .unwrap();
    }
    writeln!(w, "\nchecks:").unwrap();
    for c in &report.checks {
        let v = if c.pass { "PASS" } else { "FAIL" };
        writeln!(w, "  {v} {}: {:.3e} (limit {:.1e})", c.name, c.value, c.limit).unwrap();
    }
    match &report.failure {
        Some(f) => writeln!(w, "\nrun aborted: {f}").unwrap(),
        None => writeln!(w, "\noverall: {}", if report.passed() { "PASS" } else { "FAIL" }).unwrap(),
    }
    s
}

pub fn emit_outputs(report: &RateReport, dir: &Path, timings: bool) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let csv = dir.join("rates.csv");
    fs::write(&csv, rates_csv(report, timings)).map_err(|e| HarnessError::io(&csv, e))?;
    let txt = dir.join("report.txt");
    fs::write(&txt, report_text(report)).map_err(|e| HarnessError::io(&txt, e))?;
    Ok(())
}
