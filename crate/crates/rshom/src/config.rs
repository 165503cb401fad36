//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use rshom_core::cellsolve::SolverOptions;
use rshom_core::fields::{CoefficientSpec, CoefficientTerm, Domain, DomainKind, ModeSum, PeriodicGrid};
use rshom_core::finesolve::resolving_points;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub coefficient: CoefficientConfig,
    pub domain: DomainConfig,
    /// Strictly decreasing.
    #[serde(default)]
    pub eps: Vec<f64>,
    pub grids: GridConfig,
    #[serde(default)]
    pub expansion: ExpansionConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// Concurrent ε cases; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(default = "two")]
    pub dim: usize,
    pub mu: f64,
    /// Overall factor `δ` applied to every term.
    #[serde(default = "one")]
    pub scale: f64,
    pub terms: Vec<TermConfig>,
}

/// One trigonometric term `amplitude · cos(2π(k·y + l·z) + phase)`.
///
/// Give either `scale` (a multiple of the identity tensor) or the full `amplitude` (`n⁴` entries).
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub scale: Option<f64>,
    pub amplitude: Option<Vec<f64>>,
    pub wave_y: Vec<i64>,
    pub wave_z: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DomainChoice {
    Torus,
    Square,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainChoice,
    /// Body force `f` as a sum of `cos(2π k·x + phase)` modes.
    pub forcing: Vec<ModeConfig>,
    /// Dirichlet data `g` on the square; ignored on the torus.
    #[serde(default)]
    pub boundary: Vec<ModeConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub component: usize,
    pub amplitude: f64,
    pub wave: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub y_points: usize,
    pub z_points: usize,
    /// Macro points per axis; absent means the smallest power of two resolving `ε²/8`.
    pub macro_points: Option<usize>,
    #[serde(default = "default_macro_max")]
    pub macro_max: usize,
    #[serde(default = "default_budget")]
    pub memory_budget_mb: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExpansionConfig {
    #[serde(default = "default_cutoff")]
    pub cutoff_multiple: f64,
    #[serde(default = "three")]
    pub test_fields: usize,
    /// Refinement of the macro grid on which the weak-form check integrates.
    #[serde(default = "two")]
    pub check_oversampling: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    pub max_iter: Option<usize>,
    #[serde(default = "default_restart")]
    pub restart: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Write measured wall times into `rates.csv`. Off by default so that the
    /// file is byte-reproducible; `report.txt` always carries the timings.
    #[serde(default)]
    pub timings: bool,
    #[serde(default)]
    pub dump_fields: bool,
}

/// Pass/fail limits for the run's exit status.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "d_vel")]
    pub velocity_slope: f64,
    #[serde(default = "d_half")]
    pub corrected_slope: f64,
    #[serde(default = "d_half")]
    pub pressure_slope: f64,
    /// Largest allowed max/min ratio of a fitted constant across the sweep.
    #[serde(default = "d_spread")]
    pub constant_spread: f64,
    #[serde(default = "d_1e8")]
    pub divergence_identity: f64,
    #[serde(default = "d_1e10")]
    pub compatibility: f64,
    #[serde(default = "d_1e8")]
    pub pressure_identity: f64,
    #[serde(default = "d_1e7")]
    pub weak_form: f64,
    /// Relative residual the macroscopic solvers must reach.
    #[serde(default = "d_1e6")]
    pub solver_residual: f64,
    /// Errors at or below this count as exactly zero when fitting rates.
    #[serde(default = "d_1e10")]
    pub zero_error: f64,
}

fn two() -> usize {
    2
}
fn three() -> usize {
    3
}
fn one() -> f64 {
    1.0
}
fn default_macro_max() -> usize {
    512
}
fn default_budget() -> f64 {
    4096.0
}
fn default_cutoff() -> f64 {
    2.0
}
fn default_rtol() -> f64 {
    1e-10
}
fn default_restart() -> usize {
    40
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn d_vel() -> f64 {
    0.9
}
fn d_half() -> f64 {
    0.45
}
fn d_spread() -> f64 {
    2.0
}
fn d_1e6() -> f64 {
    1e-6
}
fn d_1e7() -> f64 {
    1e-7
}
fn d_1e8() -> f64 {
    1e-8
}
fn d_1e10() -> f64 {
    1e-10
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig { cutoff_multiple: default_cutoff(), test_fields: three(), check_oversampling: two() }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { rtol: default_rtol(), max_iter: None, restart: default_restart() }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out(), timings: false, dump_fields: false }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            velocity_slope: d_vel(),
            corrected_slope: d_half(),
            pressure_slope: d_half(),
            constant_spread: d_spread(),
            divergence_identity: d_1e8(),
            compatibility: d_1e10(),
            pressure_identity: d_1e8(),
            weak_form: d_1e7(),
            solver_residual: d_1e6(),
            zero_error: d_1e10(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

/// Rough peak working set of one ε case, in bytes.
pub fn estimated_case_bytes(points: usize, dim: usize) -> f64 {
    let len = (points as f64).powi(dim as i32);
    // n⁴ coefficient samples plus the n³ gradient families of G, K, ∂K and helpers
    let fields = dim.pow(4) + 6 * dim.pow(3) + 8 * dim * dim + 32;
    8.0 * len * fields as f64
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let n = self.coefficient.dim;
        if !(2..=3).contains(&n) {
            return Err(invalid("coefficient.dim must be 2 or 3"));
        }
        if self.domain.kind == DomainChoice::Square && n != 2 {
            return Err(invalid("the square domain is two-dimensional"));
        }
        if !(self.coefficient.scale > 0.0) {
            return Err(invalid("coefficient.scale must be positive"));
        }
        for w in self.eps.windows(2) {
            if !(w[1] < w[0]) {
                return Err(invalid("eps must be strictly decreasing"));
            }
        }
        if let Some(e) = self.eps.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(invalid(format!("eps {e} outside (0, 1]")));
        }
        for p in [self.grids.y_points, self.grids.z_points] {
            if p < 4 || !p.is_power_of_two() {
                return Err(invalid("cell grids need a power-of-two point count of at least 4"));
            }
        }
        for m in self.domain.forcing.iter().chain(&self.domain.boundary) {
            if m.component >= n || m.wave.len() != n {
                return Err(invalid("forcing modes need a component below dim and dim wave numbers"));
            }
        }
        for &eps in &self.eps {
            let p = self.macro_points(eps);
            if !p.is_power_of_two() || p < 4 {
                return Err(invalid("grids.macro_points must be a power of two of at least 4"));
            }
            if p < resolving_points(eps) {
                return Err(invalid(format!("{p} macro points do not resolve eps = {eps}")));
            }
            if p > self.grids.macro_max {
                return Err(invalid(format!(
                    "eps = {eps} needs {p} macro points, above grids.macro_max = {}",
                    self.grids.macro_max
                )));
            }
            let mb = estimated_case_bytes(p, n) / 1e6;
            if mb > self.grids.memory_budget_mb {
                return Err(invalid(format!(
                    "eps = {eps} needs about {mb:.0} MB, above the {} MB budget",
                    self.grids.memory_budget_mb
                )));
            }
        }
        if !(self.expansion.cutoff_multiple > 0.0) {
            return Err(invalid("expansion.cutoff_multiple must be positive"));
        }
        if !self.expansion.check_oversampling.is_power_of_two() {
            return Err(invalid("expansion.check_oversampling must be a power of two"));
        }
        if !(self.solver.rtol > 0.0 && self.solver.rtol < 1.0) || self.solver.restart == 0 {
            return Err(invalid("solver.rtol must lie in (0, 1) and solver.restart be positive"));
        }
        self.coefficient_spec().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    pub fn macro_points(&self, eps: f64) -> usize {
        self.grids.macro_points.unwrap_or_else(|| resolving_points(eps))
    }

    pub fn coefficient_spec(&self) -> Result<CoefficientSpec, HarnessError> {
        let c = &self.coefficient;
        let n = c.dim;
        let mut terms = Vec::with_capacity(c.terms.len());
        for t in &c.terms {
            if t.wave_y.len() != n || t.wave_z.len() != n {
                return Err(invalid("coefficient terms need dim wave numbers in y and z"));
            }
            let mut term = match (&t.scale, &t.amplitude) {
                (Some(s), None) => CoefficientTerm::isotropic(n, *s, &t.wave_y, &t.wave_z, t.phase),
                (None, Some(a)) if a.len() == n.pow(4) => CoefficientTerm {
                    amplitude: a.clone(),
                    wave_y: t.wave_y.clone(),
                    wave_z: t.wave_z.clone(),
                    phase: t.phase,
                },
                _ => return Err(invalid("each term needs either `scale` or an n⁴-entry `amplitude`")),
            };
            term.amplitude.iter_mut().for_each(|v| *v *= c.scale);
            terms.push(term);
        }
        CoefficientSpec::new(n, c.mu, terms).map_err(|e| HarnessError::Stage {
            stage: "coefficient",
            eps: None,
            source: e,
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { rtol: self.solver.rtol, max_iter: self.solver.max_iter, restart: self.solver.restart }
    }

    pub fn cell_grids(&self) -> Result<(PeriodicGrid, PeriodicGrid), HarnessError> {
        let n = self.coefficient.dim;
        let map = |e| HarnessError::Stage { stage: "cell grids", eps: None, source: e };
        Ok((
            PeriodicGrid::new(n, self.grids.y_points).map_err(map)?,
            PeriodicGrid::new(n, self.grids.z_points).map_err(map)?,
        ))
    }

    pub fn domain_for(&self, eps: f64) -> Result<Domain, HarnessError> {
        let kind = match self.domain.kind {
            DomainChoice::Torus => DomainKind::Torus,
            DomainChoice::Square => DomainKind::Square,
        };
        Domain::new(kind, self.coefficient.dim, self.macro_points(eps)).map_err(|e| HarnessError::Stage {
            stage: "domain",
            eps: Some(eps),
            source: e,
        })
    }

    pub fn forcing(&self) -> ModeSum {
        modes(self.coefficient.dim, &self.domain.forcing)
    }

    pub fn boundary(&self) -> Option<ModeSum> {
        (self.domain.kind == DomainChoice::Square && !self.domain.boundary.is_empty())
            .then(|| modes(self.coefficient.dim, &self.domain.boundary))
    }
}

fn modes(n: usize, list: &[ModeConfig]) -> ModeSum {
    list.iter().fold(ModeSum::new(n), |s, m| s.with(m.component, m.amplitude, &m.wave, m.phase))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        eps = [0.5, 0.25]
        [coefficient]
        mu = 0.4
        terms = [{ scale = 1.0, wave_y = [0, 0], wave_z = [0, 0] }]
        [domain]
        kind = "torus"
        forcing = [{ component = 0, amplitude = 1.0, wave = [0.0, 1.0] }]
        [grids]
        y_points = 8
        z_points = 8
    "#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.coefficient.dim, 2);
        assert_eq!(c.expansion.cutoff_multiple, 2.0);
        assert_eq!(c.thresholds.velocity_slope, 0.9);
        assert_eq!(c.macro_points(0.25), 128);
        assert!(!c.output.timings);
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_sweeps_and_grids() {
        let bad = [
            BASE.replace("[0.5, 0.25]", "[0.25, 0.5]"),
            BASE.replace("[0.5, 0.25]", "[0.5, 0.5]"),
            BASE.replace("[0.5, 0.25]", "[1.5]"),
            BASE.replace("y_points = 8", "y_points = 6"),
            BASE.replace("z_points = 8", "z_points = 8\nmacro_points = 32"),
            BASE.replace("z_points = 8", "z_points = 8\nmacro_max = 64"),
            BASE.replace("z_points = 8", "z_points = 8\nmemory_budget_mb = 1.0"),
            BASE.replace("mu = 0.4", "mu = 1.5"),
            BASE.replace("scale = 1.0,", ""),
            BASE.replace("wave = [0.0, 1.0]", "wave = [0.0]"),
            BASE.replace("[grids]", "bogus = 1\n[grids]"),
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::from_toml(&text), Err(HarnessError::Config(_))), "{text}");
        }
    }

    #[test]
    fn full_tensor_terms_and_scale() {
        let text = BASE.replace(
            "terms = [{ scale = 1.0, wave_y = [0, 0], wave_z = [0, 0] }]",
            "scale = 2.0\nterms = [{ amplitude = [0.5,0,0,0.5, 0,0,0,0, 0,0,0,0, 0.5,0,0,0.5], wave_y = [0, 0], wave_z = [0, 0] }]",
        );
        let c = ExperimentConfig::from_toml(&text).unwrap();
        let spec = c.coefficient_spec().unwrap();
        assert_eq!(spec.terms()[0].amplitude[0], 1.0);
    }
}
