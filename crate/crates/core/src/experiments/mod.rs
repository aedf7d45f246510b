//! Batch experiments E1–E6 and their configuration.
//!
//! Each experiment sweeps `h` over a schedule, computes one row per `h`
//! against a reference obtained from the limit anisotropy on the same grid,
//! and returns a [`ConvergenceReport`]. Rows for distinct `h` are computed
//! concurrently and assembled in order of `h`.

mod presets;
mod report;
mod runners;

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::anisotropy::{ClassTag, Classification, FamilySpec, MovingFamily};
use crate::error::{Error, Result};
use crate::functionals::{Integrand, IntegrandSpec};
use crate::grid::Grid;
use crate::mollify::MIN_RADIUS_IN_SPACINGS;

pub use presets::{sample_vector, BoundarySpec, DatumSequence, FieldPreset, PerturbationSpec};
pub use report::{
    emit, fit_loglog, fit_rate, format_float, read_csv, to_json, write_csv, ConvergenceReport, Format,
    Metadata, RateAxis, ReportRow, CSV_HEADER,
};

/// The `h` schedule used when a config gives none.
pub const DEFAULT_SCHEDULE: [u32; 6] = [1, 2, 4, 8, 16, 32];

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "GAMMALAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    #[serde(alias = "rayleigh_convergence")]
    E1,
    #[serde(alias = "noncompactness")]
    E2,
    #[serde(alias = "mollification_rate")]
    E3,
    #[serde(alias = "minima_convergence")]
    E4,
    #[serde(alias = "h_convergence")]
    E5,
    #[serde(alias = "recovery_sequence")]
    E6,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::E4,
        ExperimentId::E5,
        ExperimentId::E6,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ExperimentId::E1 => "E1",
            ExperimentId::E2 => "E2",
            ExperimentId::E3 => "E3",
            ExperimentId::E4 => "E4",
            ExperimentId::E5 => "E5",
            ExperimentId::E6 => "E6",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::E1 => "rayleigh_convergence",
            ExperimentId::E2 => "noncompactness",
            ExperimentId::E3 => "mollification_rate",
            ExperimentId::E4 => "minima_convergence",
            ExperimentId::E5 => "h_convergence",
            ExperimentId::E6 => "recovery_sequence",
        }
    }

    /// The statement the experiment checks numerically.
    pub fn theorem(self) -> &'static str {
        match self {
            ExperimentId::E1 => "convergence of Rayleigh quotients: lim R_h = R",
            ExperimentId::E2 => {
                "bounded sequences in W^{1,2}_{X^h} need not converge strongly: u_h = sin(h x2) \
                 has constant norms and tends to 0 weakly"
            }
            ExperimentId::E3 => {
                "commutator estimate: X^h(J_h * u) - X(J_h * u) -> 0 with the mollifier radius \
                 coupled to sup |C^h - C|"
            }
            ExperimentId::E4 => "convergence of minima: inf(F^{phi_h}_h + G) -> min(F^phi + G)",
            ExperimentId::E5 => "H-convergence: convergence of solutions and of momenta",
            ExperimentId::E6 => "recovery sequences: ||X^h u_h||_p^p -> ||X u||_p^p with u_h -> u",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentId::E1 => "R_h for each h against the limit quotient R",
            ExperimentId::E2 => "norms of sin(h x2) and its pairings with fixed test fields",
            ExperimentId::E3 => "commutator norm against sigma(h), with a fitted log-log rate",
            ExperimentId::E4 => "minimum of F + G with moving boundary data against the limit",
            ExperimentId::E5 => "Dirichlet solutions and momenta against the limit problem",
            ExperimentId::E6 => "energies along rate-coupled mollifications of a fixed u",
        }
    }

    fn mollifies(self) -> bool {
        matches!(self, ExperimentId::E3 | ExperimentId::E6)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual of linear solves.
    #[serde(default = "default_cg")]
    pub cg: f64,
    /// Relative-change stopping rule of Rayleigh iterations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rayleigh: Option<f64>,
}

fn default_cg() -> f64 {
    crate::solve::DEFAULT_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cg: default_cg(),
            rayleigh: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn two() -> f64 {
    2.0
}

/// An experiment configuration, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub family: FamilySpec,
    pub grid: Grid,
    /// Strictly increasing; defaults to [`DEFAULT_SCHEDULE`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_values: Option<Vec<u32>>,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub integrand: IntegrandSpec,
    /// `μ` and `g` of the perturbation (E4) or of the Dirichlet problems (E5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_data: Option<BoundarySpec>,
    /// Momentum test field `Φ`, one preset per coordinate (E5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_field: Option<Vec<FieldPreset>>,
    /// Pairing fields `w` (E2) or the field `u` being mollified (E3, E6).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub test_fields: Vec<FieldPreset>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }
}

/// Outcome of a dry run: the effective schedule and what was checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub h_values: Vec<u32>,
    /// First default-schedule value dropped at the resolvability gate.
    pub truncated_at: Option<u32>,
    /// `σ(h)` for each retained `h` (mollifying experiments only).
    pub sigma: Vec<f64>,
    pub class_tags: Vec<ClassTag>,
    pub classification: Classification,
}

pub(crate) struct Setup {
    pub grid: Grid,
    pub family: MovingFamily,
    pub integrand: Integrand,
    pub validation: Validation,
}

fn check_schedule(hs: &[u32]) -> Result<()> {
    if hs.is_empty() {
        return Err(Error::config("h_values must not be empty"));
    }
    if hs[0] < 1 {
        return Err(Error::config("h_values must be positive"));
    }
    if hs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("h_values must be strictly increasing"));
    }
    Ok(())
}

pub(crate) fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let id = cfg.experiment;
    let grid = cfg.grid.clone();
    let n = grid.dim();
    if !(cfg.p.is_finite() && cfg.p > 1.0) {
        return Err(Error::config(format!("p must satisfy 1 < p < ∞, got {}", cfg.p)));
    }
    if matches!(id, ExperimentId::E4 | ExperimentId::E5) && cfg.p != 2.0 {
        return Err(Error::config(format!("{} solves linear problems and needs p = 2", id.code())));
    }
    let family = cfg.family.build()?;
    if family.dim_n() != n {
        return Err(Error::config(format!(
            "family `{}` lives in R^{} but the grid is {n}-dimensional",
            family.name(),
            family.dim_n()
        )));
    }
    if family.class_tags().is_empty() {
        return Err(Error::config(format!(
            "family `{}` is in neither S1 nor S2",
            family.name()
        )));
    }
    let explicit = cfg.h_values.is_some();
    let mut hs = cfg.h_values.clone().unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec());
    check_schedule(&hs)?;

    let classification = family.classify(&grid, &hs)?;
    if family.has_tag(ClassTag::S1) && !classification.s1_shape {
        return Err(Error::config(format!(
            "family `{}` is tagged S1 but C^h does not keep the nonzero rows of the limit",
            family.name()
        )));
    }

    let integrand = cfg.integrand.build(n, family.dim_m())?;
    integrand.validate_on(&grid)?;

    match id {
        ExperimentId::E2 if n != 2 => {
            return Err(Error::config("E2 builds sin(h x2) and needs a 2-dimensional grid"));
        }
        ExperimentId::E4 | ExperimentId::E5 if cfg.perturbation.is_none() => {
            return Err(Error::config(format!("{} needs a `perturbation` (mu, g)", id.code())));
        }
        ExperimentId::E5 if cfg.phi_field.is_none() => {
            return Err(Error::config("E5 needs a momentum field `phi_field`"));
        }
        _ => {}
    }
    if let Some(pert) = &cfg.perturbation {
        if !(pert.mu.is_finite() && pert.mu >= 0.0) {
            return Err(Error::config(format!("perturbation mu must be >= 0, got {}", pert.mu)));
        }
        pert.g.check(n)?;
    }
    if let Some(b) = &cfg.boundary_data {
        b.phi.check(n)?;
    }
    if let Some(phi) = &cfg.phi_field {
        if phi.len() != n {
            return Err(Error::config(format!("phi_field needs {n} components, got {}", phi.len())));
        }
        for p in phi {
            p.check(n)?;
        }
    }
    for t in &cfg.test_fields {
        t.check(n)?;
    }

    let mut truncated_at = None;
    let mut sigma = Vec::new();
    if id.mollifies() {
        let required = MIN_RADIUS_IN_SPACINGS * grid.max_spacing();
        let mut kept = Vec::new();
        for &h in &hs {
            let s = family.sigma(h, &grid);
            if s < required {
                if explicit {
                    return Err(Error::Resolution {
                        what: "mollifier radius sigma(h)",
                        value: s,
                        required,
                    });
                }
                truncated_at = Some(h);
                break;
            }
            kept.push(h);
            sigma.push(s);
        }
        if kept.is_empty() {
            return Err(Error::Resolution {
                what: "mollifier radius sigma(h)",
                value: family.sigma(hs[0], &grid),
                required,
            });
        }
        hs = kept;
    }

    Ok(Setup {
        grid,
        validation: Validation {
            h_values: hs,
            truncated_at,
            sigma,
            class_tags: family.class_tags().to_vec(),
            classification,
        },
        family,
        integrand,
    })
}

/// Dry run: checks the schedule, class tags, presets and resolvability.
pub fn validate(cfg: &ExperimentConfig) -> Result<Validation> {
    setup(cfg)
        .map(|s| s.validation)
        .map_err(|e| e.in_experiment(format!("{} {}", cfg.experiment.code(), cfg.experiment.name())))
}

/// Worker count from `GAMMALAB_THREADS`, if set.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(format!("{THREADS_ENV} must be a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit()? {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::config(format!("cannot start worker threads: {e}")))
}

/// Runs the configured experiment; writes the report when `output` is set.
pub fn run(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let id = cfg.experiment;
    let context = format!("{} {}", id.code(), id.name());
    let start = Instant::now();
    let pool = thread_pool().map_err(|e| e.in_experiment(context.clone()))?;
    let mut report = pool
        .install(|| {
            let s = setup(cfg)?;
            match id {
                ExperimentId::E1 => runners::rayleigh_convergence(cfg, &s),
                ExperimentId::E2 => runners::noncompactness(cfg, &s),
                ExperimentId::E3 => runners::mollification_rate(cfg, &s),
                ExperimentId::E4 => runners::minima_convergence(cfg, &s),
                ExperimentId::E5 => runners::h_convergence(cfg, &s),
                ExperimentId::E6 => runners::recovery_sequence(cfg, &s),
            }
        })
        .map_err(|e| e.in_experiment(context.clone()))?;
    report.sort();
    report.metadata.wall_time_seconds = start.elapsed().as_secs_f64();
    report.metadata.config = Some(cfg.clone());
    if let Some(out) = &cfg.output {
        emit(&report, out.format, &out.dir).map_err(|e| e.in_experiment(context))?;
    }
    Ok(report)
}
