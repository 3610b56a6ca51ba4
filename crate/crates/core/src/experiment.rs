//! Experiment configuration, orchestration and report emission shared by the
//! command-line front end and the acceptance tests.
//!
//! A run always leaves a `summary.json` behind, also when it fails, so that
//! the cause can be read from disk.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bloch::{bloch_residuals, solve_bloch_series, BlochSolution, ProblemInstance, DEFAULT_J_MAX};
use crate::bounds::{transmon_leakage_bound, BoundReport};
use crate::dynamics::{
    gamma_scaling_sweep, perturbation_sweep, run_leakage_experiment, truncation_convergence_study,
    uniform_grid, ExperimentOptions, LeakageReport, SweepResult, TimeScaling, TruncationStudy,
};
use crate::error::{Error, Result};
use crate::models::{
    build_chain, build_harmonic_chain, transmon_bandgap, transmon_perturbation_norm, ChainSpec,
    HarmonicChainSpec,
};
use crate::operator::{matrix_serde, operator_norm, OperatorMatrix};
use crate::partition::{partition_by_intervals, partition_by_threshold};
use crate::suite::{run_on_instance, run_suite, InstanceOutcome, SuiteParams, SuiteReport};
use crate::sw::{sw_transform, SWSolution};

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Chain {
        n_cells: usize,
        g1: f64,
        g2: f64,
        g3: f64,
        disorder_strength: f64,
    },
    Harmonic {
        n_sites: usize,
        omega: f64,
        g: f64,
        fock_cutoff: usize,
        v0: f64,
    },
    Transmon {
        ej_over_ec: f64,
        transparency_d: f64,
    },
    Custom {
        #[serde(with = "matrix_serde")]
        h0: crate::operator::CMat,
        #[serde(with = "matrix_serde")]
        v: crate::operator::CMat,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionConfig {
    Threshold(f64),
    Intervals(Vec<[f64; 2]>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_max: 200.0,
            n_points: 2001,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub series_tol: f64,
    /// Largest accepted Bloch-equation residual, relative to `max(1, |H|)`.
    pub residual_tol: f64,
    pub j_max: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            series_tol: crate::bloch::DEFAULT_SERIES_TOL,
            residual_tol: 1e-10,
            j_max: DEFAULT_J_MAX,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    /// Leakage time series against the eternal bound.
    Leakage,
    /// Bloch series, plus `D_Bloch(t)` on the time grid.
    Bloch,
    /// Schrieffer-Wolff transform, plus `D_SW(t)`.
    Sw,
    /// Seeded invariant suite and invariants of the configured instance.
    Suite,
    /// Fock-cutoff convergence study (harmonic chain only).
    Truncation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Summary,
    Leakage,
    Bloch,
    Sw,
    Bounds,
    Partition,
    Suite,
    Truncation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub kind: ReportKind,
    /// Relative paths resolve against the output directory.
    pub path: PathBuf,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub cutoffs: Vec<usize>,
    pub t_probe: f64,
    pub group: usize,
    #[serde(default = "default_truncation_tol")]
    pub tolerance: f64,
}

fn default_truncation_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub partition: Option<PartitionConfig>,
    #[serde(default)]
    pub t_grid: TimeGrid,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_analyses")]
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
    #[serde(default)]
    pub suite: Option<SuiteParams>,
    #[serde(default)]
    pub truncation: Option<TruncationConfig>,
}

fn default_gamma() -> f64 {
    1.0
}

fn default_analyses() -> Vec<Analysis> {
    vec![Analysis::Leakage]
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.t_grid.t_max >= 0.0) || self.t_grid.n_points == 0 {
            return bad("t_grid needs t_max >= 0 and n_points >= 1".into());
        }
        if !(self.tolerances.series_tol > 0.0) || !(self.tolerances.residual_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if matches!(self.model, ModelConfig::Chain { .. }) && self.seed.is_none() {
            return bad("the chain model draws random disorder and needs a seed".into());
        }
        if self.analyses.contains(&Analysis::Suite) && self.seed.is_none() && self.suite.is_none() {
            return bad("the invariant suite needs a seed".into());
        }
        if self.analyses.contains(&Analysis::Truncation) {
            if !matches!(self.model, ModelConfig::Harmonic { .. }) {
                return bad("truncation analysis needs the harmonic model".into());
            }
            if self.truncation.is_none() {
                return bad("truncation analysis needs a `truncation` block".into());
            }
        }
        if matches!(
            self.model,
            ModelConfig::Chain { .. } | ModelConfig::Custom { .. }
        ) && self.partition.is_none()
        {
            return bad("chain and custom models need a `partition`".into());
        }
        for o in &self.outputs {
            let csv_ok = matches!(o.kind, ReportKind::Leakage | ReportKind::Truncation);
            if o.format == Format::Csv && !csv_ok {
                return bad(format!("{:?} reports are JSON only", o.kind));
            }
        }
        Ok(())
    }

    pub fn is_formula_only(&self) -> bool {
        matches!(self.model, ModelConfig::Transmon { .. })
    }
}

/// `H0`, `V` and a partition built from a configuration.
pub fn build_instance(config: &ExperimentConfig) -> Result<ProblemInstance> {
    build_instance_with(config, None)
}

fn build_instance_with(config: &ExperimentConfig, cutoff: Option<usize>) -> Result<ProblemInstance> {
    let (h0, v, hint) = match &config.model {
        ModelConfig::Chain {
            n_cells,
            g1,
            g2,
            g3,
            disorder_strength,
        } => {
            let spec = ChainSpec {
                n_cells: *n_cells,
                g1: *g1,
                g2: *g2,
                g3: *g3,
                disorder_strength: *disorder_strength,
                seed: config
                    .seed
                    .ok_or_else(|| Error::ConfigInvalid("chain model needs a seed".into()))?,
            };
            let (h0, v) = build_chain(&spec)?;
            (h0, v, None)
        }
        ModelConfig::Harmonic {
            n_sites,
            omega,
            g,
            fock_cutoff,
            v0,
        } => {
            let m = build_harmonic_chain(&HarmonicChainSpec {
                n_sites: *n_sites,
                omega: *omega,
                g: *g,
                fock_cutoff: cutoff.unwrap_or(*fock_cutoff),
                v0: *v0,
            })?;
            (m.h0, m.v, Some(m.band_intervals))
        }
        ModelConfig::Transmon { .. } => {
            return Err(Error::ConfigInvalid(
                "the transmon model is formula-level and has no matrices".into(),
            ))
        }
        ModelConfig::Custom { h0, v } => (
            OperatorMatrix::hermitian(h0.clone())?,
            OperatorMatrix::hermitian(v.clone())?,
            None,
        ),
    };
    let eig = h0.eig()?;
    let partition = match (&config.partition, hint) {
        (Some(PartitionConfig::Threshold(t)), _) => partition_by_threshold(&eig, *t)?,
        (Some(PartitionConfig::Intervals(iv)), _) => {
            let iv: Vec<(f64, f64)> = iv.iter().map(|&[a, b]| (a, b)).collect();
            partition_by_intervals(&eig, &iv)?
        }
        (None, Some(iv)) => partition_by_intervals(&eig, &iv)?,
        (None, None) => return Err(Error::ConfigInvalid("no partition given".into())),
    };
    ProblemInstance::new(h0, v, config.gamma, partition)
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ConfigError,
    ConvergenceError,
    BoundViolation,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::ConfigError => 2,
            Status::ConvergenceError => 3,
            Status::BoundViolation => 4,
        }
    }

    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::ConfigInvalid(_)
            | Error::InvalidModel(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::NotSquare { .. }
            | Error::DimensionMismatch { .. }
            | Error::NonHermitianInput { .. }
            | Error::NoGapFound { .. }
            | Error::UncoveredEigenvalue { .. }
            | Error::OverlappingIntervals { .. }
            | Error::InvalidPartition(_)
            | Error::IndexOutOfRange { .. } => Status::ConfigError,
            _ => Status::ConvergenceError,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// `module::operation`.
    pub origin: String,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self {
            origin: e.origin().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub passed: bool,
    pub instances: usize,
    pub failures: usize,
    pub configured_instance_passed: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: Status,
    pub exit_code: i32,
    pub seed: Option<u64>,
    pub gamma: f64,
    pub dim: Option<usize>,
    pub eta: Option<f64>,
    pub v_norm: Option<f64>,
    pub bounds: Option<BoundReport>,
    /// Transmon leakage bound in units of `E_C`.
    pub transmon_bound: Option<f64>,
    pub max_leakage: Option<f64>,
    pub violations: usize,
    #[serde(rename = "J")]
    pub order: Option<usize>,
    pub delta: Option<f64>,
    pub tail_bound: Option<f64>,
    /// Largest Bloch-equation residual over groups.
    pub bloch_residual: Option<f64>,
    pub w_distance: Option<f64>,
    pub invariant_suite: Option<SuiteSummary>,
    pub truncation: Option<TruncationStudy>,
    pub error: Option<ErrorRecord>,
}

impl Summary {
    fn empty(config: &ExperimentConfig) -> Self {
        Self {
            status: Status::Ok,
            exit_code: 0,
            seed: config.seed,
            gamma: config.gamma,
            dim: None,
            eta: None,
            v_norm: None,
            bounds: None,
            transmon_bound: None,
            max_leakage: None,
            violations: 0,
            order: None,
            delta: None,
            tail_bound: None,
            bloch_residual: None,
            w_distance: None,
            invariant_suite: None,
            truncation: None,
            error: None,
        }
    }

    fn fail(&mut self, e: &Error) {
        self.status = Status::of_error(e);
        self.exit_code = self.status.exit_code();
        self.error = Some(e.into());
    }
}

/// Everything a run produced, for callers that want more than the summary.
#[derive(Clone, Debug, Default)]
pub struct RunArtifacts {
    pub instance: Option<ProblemInstance>,
    pub leakage: Option<LeakageReport>,
    pub bloch: Option<BlochSolution>,
    pub sw: Option<SWSolution>,
    pub suite: Option<SuiteReport>,
    pub configured: Option<InstanceOutcome>,
}

/// Runs the configured analyses without touching the file system.
pub fn execute(config: &ExperimentConfig) -> (Summary, RunArtifacts) {
    let mut summary = Summary::empty(config);
    let mut art = RunArtifacts::default();
    if let Err(e) = execute_into(config, &mut summary, &mut art) {
        summary.fail(&e);
    }
    (summary, art)
}

fn execute_into(config: &ExperimentConfig, s: &mut Summary, art: &mut RunArtifacts) -> Result<()> {
    config.validate()?;
    if let ModelConfig::Transmon {
        ej_over_ec,
        transparency_d,
    } = config.model
    {
        let eta = transmon_bandgap(1, ej_over_ec)?;
        let v_norm = transmon_perturbation_norm(ej_over_ec, transparency_d);
        s.eta = Some(eta);
        s.v_norm = Some(v_norm);
        s.bounds = Some(BoundReport::evaluate(v_norm, 1.0, eta));
        s.transmon_bound = Some(transmon_leakage_bound(ej_over_ec, transparency_d)?);
        return Ok(());
    }
    let inst = build_instance(config)?;
    s.dim = Some(inst.dim());
    s.eta = Some(inst.eta());
    s.v_norm = Some(inst.v_norm());
    s.bounds = Some(BoundReport::evaluate(inst.v_norm(), inst.gamma, inst.eta()));
    let wants = |a| config.analyses.contains(&a);
    let tol = config.tolerances;

    if wants(Analysis::Bloch) || wants(Analysis::Sw) {
        let bloch = solve_bloch_series(&inst, tol.series_tol, tol.j_max)?;
        s.order = Some(bloch.order);
        s.delta = Some(bloch.delta_bound);
        s.tail_bound = Some(bloch.tail_bound);
        let r = bloch_residuals(&inst, &bloch);
        let worst = r.invariance.max(r.right_projection).max(r.left_projection);
        s.bloch_residual = Some(worst);
        if worst > tol.residual_tol * operator_norm(&inst.hamiltonian()).max(1.0) {
            s.violations += 1;
        }
        if wants(Analysis::Sw) {
            let sw = sw_transform(&inst, &bloch)?;
            s.w_distance = Some(sw.w_distance);
            art.sw = Some(sw);
        }
        art.bloch = Some(bloch);
    }
    if wants(Analysis::Leakage) || wants(Analysis::Bloch) || wants(Analysis::Sw) {
        let times = uniform_grid(config.t_grid.t_max, config.t_grid.n_points);
        let options = ExperimentOptions {
            distances: wants(Analysis::Bloch) || wants(Analysis::Sw),
            series_tol: tol.series_tol,
            j_max: tol.j_max,
        };
        let report = run_leakage_experiment(&inst, &times, &options)?;
        s.max_leakage = Some(report.max_leakage);
        s.violations = report.violations.len();
        art.leakage = Some(report);
    }
    if wants(Analysis::Suite) {
        let params = suite_params(config);
        let report = run_suite(params);
        let configured = run_on_instance(&inst, tol.series_tol);
        s.invariant_suite = Some(SuiteSummary {
            passed: report.passed() && configured.passed(),
            instances: report.instances.len(),
            failures: report.failures,
            configured_instance_passed: Some(configured.passed()),
        });
        art.suite = Some(report);
        art.configured = Some(configured);
    }
    if wants(Analysis::Truncation) {
        let t = config.truncation.as_ref().expect("validated");
        let study = truncation_convergence_study(
            |cutoff| build_instance_with(config, Some(cutoff)),
            &t.cutoffs,
            t.t_probe,
            t.group,
        )?;
        if !study.converged(t.tolerance, TRUNCATION_NOISE_FLOOR) {
            s.violations += 1;
        }
        s.truncation = Some(study);
    }
    art.instance = Some(inst);

    let suite_failed = s.invariant_suite.as_ref().is_some_and(|r| !r.passed);
    if s.violations > 0 || suite_failed {
        s.status = Status::BoundViolation;
        s.exit_code = s.status.exit_code();
    }
    Ok(())
}

/// Differences below this are rounding noise in the truncation study.
pub const TRUNCATION_NOISE_FLOOR: f64 = 1e-12;

fn suite_params(config: &ExperimentConfig) -> SuiteParams {
    let mut p = config.suite.unwrap_or_default();
    if config.suite.is_none() {
        p.seed = config.seed.unwrap_or(0);
        p.series_tol = config.tolerances.series_tol;
    }
    p
}

/// Runs the configuration and writes `summary.json` plus the requested
/// outputs under `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<Summary> {
    let (mut summary, art) = execute(config);
    fs::create_dir_all(out_dir)?;
    if let Err(e) = write_outputs(config, &summary, &art, out_dir) {
        if summary.error.is_none() {
            summary.fail(&e);
        }
    }
    write_json(&out_dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn missing(kind: ReportKind) -> Error {
    Error::ConfigInvalid(format!(
        "output {kind:?} requested but the matching analysis did not run"
    ))
}

fn write_outputs(
    config: &ExperimentConfig,
    summary: &Summary,
    art: &RunArtifacts,
    out_dir: &Path,
) -> Result<()> {
    for o in &config.outputs {
        let path = out_dir.join(&o.path);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        match (o.kind, o.format) {
            (ReportKind::Summary, _) => write_json(&path, summary)?,
            (ReportKind::Leakage, Format::Csv) => {
                let r = art.leakage.as_ref().ok_or(missing(o.kind))?;
                r.write_csv(fs::File::create(&path)?)?;
            }
            (ReportKind::Leakage, Format::Json) => {
                write_json(&path, art.leakage.as_ref().ok_or(missing(o.kind))?)?
            }
            (ReportKind::Bloch, _) => write_json(&path, art.bloch.as_ref().ok_or(missing(o.kind))?)?,
            (ReportKind::Sw, _) => write_json(&path, art.sw.as_ref().ok_or(missing(o.kind))?)?,
            (ReportKind::Bounds, _) => write_json(&path, &summary.bounds)?,
            (ReportKind::Partition, _) => {
                let inst = art.instance.as_ref().ok_or(missing(o.kind))?;
                write_json(&path, &inst.partition.record())?
            }
            (ReportKind::Suite, _) => {
                let report = art.suite.as_ref().ok_or(missing(o.kind))?;
                write_json(&path, &(report, &art.configured))?
            }
            (ReportKind::Truncation, Format::Json) => {
                write_json(&path, summary.truncation.as_ref().ok_or(missing(o.kind))?)?
            }
            (ReportKind::Truncation, Format::Csv) => {
                let t = summary.truncation.as_ref().ok_or(missing(o.kind))?;
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["cutoff", "leakage"])?;
                for (c, l) in t.cutoffs.iter().zip(&t.leakage) {
                    w.write_record([c.to_string(), l.to_string()])?;
                }
                w.flush()?;
            }
        }
    }
    Ok(())
}

/// Invariant suite on the seeded batch plus the configured instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: SuiteReport,
    pub configured: Option<InstanceOutcome>,
    pub error: Option<ErrorRecord>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.suite.passed()
            && self.configured.as_ref().is_none_or(|c| c.passed())
    }

    pub fn status(&self) -> Status {
        match &self.error {
            Some(_) if self.configured.is_none() => Status::ConfigError,
            _ if self.passed() => Status::Ok,
            _ => Status::BoundViolation,
        }
    }
}

pub fn verify(config: &ExperimentConfig) -> VerifyReport {
    let suite = run_suite(suite_params(config));
    let (configured, error) = if config.is_formula_only() {
        (None, None)
    } else {
        match build_instance(config) {
            Ok(inst) => {
                let outcome = run_on_instance(&inst, config.tolerances.series_tol);
                (Some(outcome), None)
            }
            Err(e) => (None, Some(ErrorRecord::from(&e))),
        }
    };
    VerifyReport {
        suite,
        configured,
        error,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Gamma,
    /// `V` scaled by each factor at fixed gamma.
    Perturbation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub time_scaling: TimeScaling,
    #[serde(flatten)]
    pub result: SweepResult,
}

impl SweepReport {
    /// CSV with columns `parameter,max_leakage`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["parameter", "max_leakage"])?;
        for (p, l) in self.result.parameters.iter().zip(&self.result.max_leakage) {
            w.write_record([p.to_string(), l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn sweep(
    config: &ExperimentConfig,
    kind: SweepKind,
    values: &[f64],
    time_scaling: TimeScaling,
) -> Result<SweepReport> {
    config.validate()?;
    let inst = build_instance(config)?;
    let times = uniform_grid(config.t_grid.t_max, config.t_grid.n_points);
    let result = match kind {
        SweepKind::Gamma => gamma_scaling_sweep(&inst, values, &times, time_scaling)?,
        SweepKind::Perturbation => perturbation_sweep(&inst, values, &times)?,
    };
    Ok(SweepReport {
        kind,
        time_scaling,
        result,
    })
}
