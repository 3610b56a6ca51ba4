//! True and effective evolutions, leakage time series, scaling sweeps and
//! truncation studies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{solve_bloch_series, BlochSolution, ProblemInstance};
use crate::bounds::{sw_condition_holds, sw_distance_bound, BoundReport};
use crate::error::{Error, Result};
use crate::operator::{
    herm_eig, hermitian_part, invert, matmul, operator_norm, unitary_propagator, CMat, HermitianEigenSystem,
    C64,
};
use crate::sw::sw_transform;

/// Absolute slack before a sampled value counts as a bound violation.
pub const VIOLATION_SLACK: f64 = 1e-9;

/// Env var capping the worker threads.
pub const THREADS_ENV: &str = "LEAKAGE_THREADS";

/// Builds the global rayon pool honouring `LEAKAGE_THREADS`. Calling it more
/// than once, or after the pool was started, is harmless.
pub fn init_thread_pool_from_env() {
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// `n` uniform points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Eigendecomposition of `H` expressed in the eigenbasis of `H0`, which makes
/// every `P_k` a column selection.
struct Evolution {
    /// `U0^dagger U_H`.
    s: CMat,
    eig: HermitianEigenSystem,
}

impl Evolution {
    fn new(inst: &ProblemInstance) -> Result<Self> {
        let eig = herm_eig(&inst.hamiltonian())?;
        let s = inst.partition.eig().eigenvectors.adjoint() * &eig.eigenvectors;
        Ok(Self { s, eig })
    }

    fn propagator_in_h0_basis(&self, t: f64) -> CMat {
        let mut scaled = self.s.clone();
        for (j, &l) in self.eig.eigenvalues.iter().enumerate() {
            let phase = C64::from_polar(1.0, -l * t);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= phase;
            }
        }
        matmul(&scaled, &self.s.adjoint())
    }

    fn leakages(&self, inst: &ProblemInstance, t: f64) -> Vec<f64> {
        let m = self.propagator_in_h0_basis(t);
        let part = &inst.partition;
        part.groups()
            .iter()
            .enumerate()
            .map(|(k, cols)| {
                let rows = part.complement_indices(k).expect("valid group");
                let block = CMat::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])]);
                operator_norm(&block).min(1.0)
            })
            .collect()
    }
}

/// `|Q_k exp(-itH) P_k|`.
pub fn leakage_at(inst: &ProblemInstance, k: usize, t: f64) -> Result<f64> {
    inst.partition.group(k)?;
    let u = unitary_propagator(&herm_eig(&inst.hamiltonian())?, t);
    let p = inst.partition.projection(k)?;
    let q = inst.partition.complement(k)?;
    Ok(operator_norm(&(q * u * p)))
}

/// Leakage of every group at every time, indexed `[k][t]`.
pub fn leakage_series(inst: &ProblemInstance, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let evo = Evolution::new(inst)?;
    let per_t: Vec<Vec<f64>> = times.par_iter().map(|&t| evo.leakages(inst, t)).collect();
    Ok(transpose(per_t, inst.partition.num_groups()))
}

fn transpose(per_t: Vec<Vec<f64>>, groups: usize) -> Vec<Vec<f64>> {
    (0..groups)
        .map(|k| per_t.iter().map(|row| row[k]).collect())
        .collect()
}

/// Effective generator compared with the true evolution.
#[derive(Clone, Debug)]
pub enum Generator {
    /// `exp(-it H_Bloch) = Omega^{-1} exp(-itH) Omega`.
    Bloch { omega: CMat, omega_inverse: CMat },
    /// Hermitian `H_SW`.
    SchriefferWolff { h_sw: CMat },
}

impl Generator {
    pub fn bloch(sol: &BlochSolution) -> Result<Self> {
        Ok(Generator::Bloch {
            omega_inverse: invert(&sol.omega)?,
            omega: sol.omega.clone(),
        })
    }
}

/// Precomputed pair of propagators for repeated distance evaluations.
struct DistanceEvaluator {
    h: HermitianEigenSystem,
    kind: DistanceKind,
}

enum DistanceKind {
    /// `A = Omega^{-1} U_H`, `B = U_H^dagger Omega`.
    Bloch { a: CMat, b: CMat },
    SchriefferWolff(HermitianEigenSystem),
}

impl DistanceEvaluator {
    fn new(inst: &ProblemInstance, generator: &Generator) -> Result<Self> {
        let h = herm_eig(&inst.hamiltonian())?;
        let kind = match generator {
            Generator::Bloch {
                omega,
                omega_inverse,
            } => DistanceKind::Bloch {
                a: omega_inverse * &h.eigenvectors,
                b: h.eigenvectors.adjoint() * omega,
            },
            Generator::SchriefferWolff { h_sw } => {
                DistanceKind::SchriefferWolff(herm_eig(&hermitian_part(h_sw))?)
            }
        };
        Ok(Self { h, kind })
    }

    fn at(&self, t: f64) -> f64 {
        let true_u = unitary_propagator(&self.h, t);
        let effective = match &self.kind {
            DistanceKind::Bloch { a, b } => {
                let mut scaled = a.clone();
                for (j, &l) in self.h.eigenvalues.iter().enumerate() {
                    let phase = C64::from_polar(1.0, -l * t);
                    for z in scaled.column_mut(j).iter_mut() {
                        *z *= phase;
                    }
                }
                matmul(&scaled, b)
            }
            DistanceKind::SchriefferWolff(eig) => unitary_propagator(eig, t),
        };
        operator_norm(&(true_u - effective))
    }
}

/// `|exp(-itH) - exp(-it G)|`.
pub fn evolution_distance(inst: &ProblemInstance, generator: &Generator, t: f64) -> Result<f64> {
    Ok(DistanceEvaluator::new(inst, generator)?.at(t))
}

pub fn evolution_distance_series(
    inst: &ProblemInstance,
    generator: &Generator,
    times: &[f64],
) -> Result<Vec<f64>> {
    let eval = DistanceEvaluator::new(inst, generator)?;
    Ok(times.par_iter().map(|&t| eval.at(t)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    /// Also sample `D_Bloch(t)` and, when defined, `D_SW(t)`.
    pub distances: bool,
    pub series_tol: f64,
    pub j_max: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            distances: false,
            series_tol: crate::bloch::DEFAULT_SERIES_TOL,
            j_max: crate::bloch::DEFAULT_J_MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `leakage`, `d_bloch` or `d_sw`.
    pub quantity: String,
    pub k: Option<usize>,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub times: Vec<f64>,
    /// `[k][t]`.
    pub per_block_leakage: Vec<Vec<f64>>,
    pub d_bloch_series: Option<Vec<f64>>,
    pub d_sw_series: Option<Vec<f64>>,
    pub bounds: BoundReport,
    pub max_leakage: f64,
    pub violations: Vec<Violation>,
}

/// CSV header of [`LeakageReport::write_csv`].
pub const LEAKAGE_CSV_COLUMNS: [&str; 5] = ["t", "k", "leakage", "d_bloch", "d_sw"];

impl LeakageReport {
    /// One row per `(t, k)`, time-major; distance columns repeat per `k` and
    /// are empty when not computed.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LEAKAGE_CSV_COLUMNS)?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (i, t) in self.times.iter().enumerate() {
            for (k, row) in self.per_block_leakage.iter().enumerate() {
                w.write_record([
                    t.to_string(),
                    k.to_string(),
                    row[i].to_string(),
                    fmt(self.d_bloch_series.as_ref().map(|d| d[i])),
                    fmt(self.d_sw_series.as_ref().map(|d| d[i])),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples the leakage of every group, optionally the evolution distances,
/// and records every sample above its bound.
pub fn run_leakage_experiment(
    inst: &ProblemInstance,
    times: &[f64],
    options: &ExperimentOptions,
) -> Result<LeakageReport> {
    let bounds = BoundReport::evaluate(inst.v_norm(), inst.gamma, inst.eta());
    let per_block_leakage = leakage_series(inst, times)?;
    let mut violations = Vec::new();
    let leakage_bound = bounds.epsilon.map_or(bounds.leakage_linear, |e| e.min(bounds.leakage_linear));
    for (k, row) in per_block_leakage.iter().enumerate() {
        for (&t, &value) in times.iter().zip(row) {
            if value > leakage_bound + VIOLATION_SLACK {
                violations.push(Violation {
                    quantity: "leakage".into(),
                    k: Some(k),
                    t,
                    value,
                    bound: leakage_bound,
                });
            }
        }
    }
    let (mut d_bloch_series, mut d_sw_series) = (None, None);
    if options.distances {
        let bloch = solve_bloch_series(inst, options.series_tol, options.j_max)?;
        let series = evolution_distance_series(inst, &Generator::bloch(&bloch)?, times)?;
        if let Some(eps) = bounds.epsilon {
            collect_violations(&mut violations, "d_bloch", times, &series, eps);
        }
        d_bloch_series = Some(series);
        if sw_condition_holds(inst.x()) {
            let sw = sw_transform(inst, &bloch)?;
            let generator = Generator::SchriefferWolff { h_sw: sw.h_sw };
            let series = evolution_distance_series(inst, &generator, times)?;
            let bound = sw_distance_bound(inst.x())?;
            collect_violations(&mut violations, "d_sw", times, &series, bound);
            d_sw_series = Some(series);
        }
    }
    let max_leakage = per_block_leakage
        .iter()
        .flatten()
        .copied()
        .fold(0.0, f64::max);
    Ok(LeakageReport {
        times: times.to_vec(),
        per_block_leakage,
        d_bloch_series,
        d_sw_series,
        bounds,
        max_leakage,
        violations,
    })
}

fn collect_violations(out: &mut Vec<Violation>, name: &str, times: &[f64], series: &[f64], bound: f64) {
    for (&t, &value) in times.iter().zip(series) {
        if value > bound + VIOLATION_SLACK {
            out.push(Violation {
                quantity: name.into(),
                k: None,
                t,
                value,
                bound,
            });
        }
    }
}

/// Least-squares slope and intercept of `log y` against `log x`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// How the time grid follows the swept parameter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScaling {
    /// Same grid for every point.
    #[default]
    Fixed,
    /// Grid divided by gamma, so every point covers the same number of
    /// unperturbed periods.
    PerGamma,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Swept parameter values (gamma or perturbation scale).
    pub parameters: Vec<f64>,
    pub max_leakage: Vec<f64>,
    /// Slope of `log max_leakage` against `log parameter`.
    pub slope: f64,
    pub intercept: f64,
}

/// Minimum usable points and decades for a scaling fit.
const MIN_SWEEP_POINTS: usize = 4;
/// Leakage below this is rounding noise and unusable in a log fit.
const SWEEP_LEAKAGE_FLOOR: f64 = 1e-12;
const MIN_SWEEP_DECADES: f64 = 1.5;

fn fit_sweep(parameters: Vec<f64>, max_leakage: Vec<f64>) -> Result<SweepResult> {
    let usable: Vec<(f64, f64)> = parameters
        .iter()
        .zip(&max_leakage)
        .filter(|(p, l)| **p > 0.0 && **l > SWEEP_LEAKAGE_FLOOR && l.is_finite())
        .map(|(&p, &l)| (p, l))
        .collect();
    if usable.len() < MIN_SWEEP_POINTS {
        return Err(Error::DegenerateSweep(format!(
            "{} usable points (nonzero leakage), need {MIN_SWEEP_POINTS}",
            usable.len()
        )));
    }
    let (lo, hi) = usable
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (p, _)| (lo.min(*p), hi.max(*p)));
    if (hi / lo).log10() < MIN_SWEEP_DECADES {
        return Err(Error::DegenerateSweep(format!(
            "sweep spans {:.2} decades, need {MIN_SWEEP_DECADES}",
            (hi / lo).log10()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
    let (slope, intercept) = log_log_fit(&xs, &ys);
    Ok(SweepResult {
        parameters,
        max_leakage,
        slope,
        intercept,
    })
}

fn max_leakage(inst: &ProblemInstance, times: &[f64]) -> Result<f64> {
    Ok(leakage_series(inst, times)?
        .iter()
        .flatten()
        .copied()
        .fold(0.0, f64::max))
}

/// Maximum leakage for each gamma and its log-log slope.
pub fn gamma_scaling_sweep(
    template: &ProblemInstance,
    gammas: &[f64],
    times: &[f64],
    scaling: TimeScaling,
) -> Result<SweepResult> {
    let maxima = gammas
        .par_iter()
        .map(|&gamma| {
            let inst = template.with_gamma(gamma)?;
            let threshold = inst.bloch_threshold();
            if !(gamma > threshold) {
                return Err(Error::GammaBelowThreshold { gamma, threshold });
            }
            let grid: Vec<f64> = match scaling {
                TimeScaling::Fixed => times.to_vec(),
                TimeScaling::PerGamma => times.iter().map(|t| t / gamma).collect(),
            };
            max_leakage(&inst, &grid)
        })
        .collect::<Result<Vec<_>>>()?;
    fit_sweep(gammas.to_vec(), maxima)
}

/// Maximum leakage with `V` replaced by `s V` for each scale `s`, at fixed
/// gamma. The slope against `s` mirrors the gamma slope with opposite sign.
pub fn perturbation_sweep(
    template: &ProblemInstance,
    scales: &[f64],
    times: &[f64],
) -> Result<SweepResult> {
    let maxima = scales
        .par_iter()
        .map(|&s| {
            let v = crate::operator::OperatorMatrix::hermitian(template.v.matrix() * C64::new(s, 0.0))?;
            let inst = ProblemInstance::new(
                template.h0.clone(),
                v,
                template.gamma,
                template.partition.clone(),
            )?;
            max_leakage(&inst, times)
        })
        .collect::<Result<Vec<_>>>()?;
    fit_sweep(scales.to_vec(), maxima)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationStudy {
    pub cutoffs: Vec<usize>,
    pub t_probe: f64,
    pub group: usize,
    pub leakage: Vec<f64>,
    /// `|L(K_{i+1}) - L(K_i)|`.
    pub differences: Vec<f64>,
}

impl TruncationStudy {
    /// Differences shrink (or stay below `noise_floor`) and the last one is
    /// within `tol`.
    pub fn converged(&self, tol: f64, noise_floor: f64) -> bool {
        let shrinking = self
            .differences
            .windows(2)
            .all(|w| w[1] <= w[0] || w[1] <= noise_floor);
        shrinking && self.differences.last().is_some_and(|&d| d <= tol)
    }
}

/// Leakage of group `k` at `t_probe` for each truncation level `K`, with
/// `build(K)` producing the truncated instance. The probed group has to
/// exist at every level with the spectrum it has at the first level.
pub fn truncation_convergence_study<F>(
    build: F,
    cutoffs: &[usize],
    t_probe: f64,
    k: usize,
) -> Result<TruncationStudy>
where
    F: Fn(usize) -> Result<ProblemInstance> + Sync,
{
    if cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateSweep("cutoffs must be strictly increasing".into()));
    }
    let instances = cutoffs
        .par_iter()
        .map(|&c| build(c))
        .collect::<Result<Vec<_>>>()?;
    let mut reference: Option<Vec<f64>> = None;
    for (inst, &cutoff) in instances.iter().zip(cutoffs) {
        let part = &inst.partition;
        let group = part
            .group(k)
            .map_err(|_| Error::GroupNotPreserved { group: k, cutoff })?;
        let spectrum: Vec<f64> = group.iter().map(|&i| part.eig().eigenvalues[i]).collect();
        match &reference {
            None => reference = Some(spectrum),
            Some(r) => {
                let same = r.len() == spectrum.len()
                    && r.iter().zip(&spectrum).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
                if !same {
                    return Err(Error::GroupNotPreserved { group: k, cutoff });
                }
            }
        }
    }
    let leakage = instances
        .par_iter()
        .map(|inst| leakage_at(inst, k, t_probe))
        .collect::<Result<Vec<_>>>()?;
    let differences = leakage.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    Ok(TruncationStudy {
        cutoffs: cutoffs.to_vec(),
        t_probe,
        group: k,
        leakage,
        differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::epsilon_of;
    use crate::models::{build_harmonic_chain, HarmonicChainSpec};
    use crate::operator::OperatorMatrix;
    use crate::partition::{partition_by_intervals, SpectralPartition};
    use crate::suite::random_instance;

    fn rabi() -> ProblemInstance {
        let h0 = OperatorMatrix::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let v = OperatorMatrix::from_real(2, &[0.0, 0.05, 0.05, 0.0]).unwrap();
        let part = SpectralPartition::from_groups(h0.eig().unwrap(), vec![vec![0], vec![1]]).unwrap();
        ProblemInstance::new(h0, v, 1.0, part).unwrap()
    }

    /// Two-level Rabi formula: `|<1|exp(-itH)|0>| = (v/W) |sin(W t)|`,
    /// `W = sqrt(v^2 + gamma^2/4)`.
    fn rabi_closed_form(v: f64, gamma: f64, t: f64) -> f64 {
        let w = (v * v + gamma * gamma / 4.0).sqrt();
        v / w * (w * t).sin().abs()
    }

    #[test]
    fn zero_time_and_zero_perturbation() {
        let inst = random_instance(3, 9, 3, 0.01);
        for k in 0..3 {
            assert!(leakage_at(&inst, k, 0.0).unwrap() < 1e-14);
        }
        let free = random_instance(3, 9, 3, 0.0);
        for t in [0.5, 7.0, 100.0] {
            assert!(leakage_at(&free, 1, t).unwrap() < 1e-12);
        }
        let report = run_leakage_experiment(
            &free,
            &uniform_grid(50.0, 101),
            &ExperimentOptions {
                distances: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(report.max_leakage < 1e-12);
        assert!(report.d_bloch_series.unwrap().iter().all(|&d| d < 1e-12));
        assert!(report.d_sw_series.unwrap().iter().all(|&d| d < 1e-12));
        assert_eq!(report.bounds.epsilon, Some(0.0));
    }

    #[test]
    fn rabi_leakage_matches_closed_form() {
        let inst = rabi();
        let times: Vec<f64> = (0..=20000).map(|i| 0.01 * i as f64).collect();
        let series = leakage_series(&inst, &times).unwrap();
        for (i, &t) in times.iter().enumerate().step_by(97) {
            assert!((series[0][i] - rabi_closed_form(0.05, 1.0, t)).abs() < 1e-12);
            assert!((series[1][i] - series[0][i]).abs() < 1e-12);
        }
        let report = run_leakage_experiment(&inst, &times, &ExperimentOptions::default()).unwrap();
        let exact_max = 0.05 / (0.05f64 * 0.05 + 0.25).sqrt();
        assert!((report.max_leakage - exact_max).abs() < 1e-6);
        assert!((report.max_leakage - 0.099504).abs() < 1e-6);
        assert!(report.max_leakage <= epsilon_of(0.05).unwrap());
        assert!(report.violations.is_empty());
        let direct = leakage_at(&inst, 0, 3.3).unwrap();
        assert!((direct - rabi_closed_form(0.05, 1.0, 3.3)).abs() < 1e-12);
    }

    #[test]
    fn distances_respect_bounds() {
        let inst = random_instance(12, 12, 3, 0.015);
        let times = uniform_grid(100.0, 400);
        let report = run_leakage_experiment(
            &inst,
            &times,
            &ExperimentOptions {
                distances: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        let eps = epsilon_of(inst.x()).unwrap();
        let sw = sw_distance_bound(inst.x()).unwrap();
        let db = report.d_bloch_series.as_ref().unwrap();
        let ds = report.d_sw_series.as_ref().unwrap();
        assert_eq!(db[0], 0.0f64.max(db[0]));
        assert!(db[0] < 1e-12 && ds[0] < 1e-12);
        assert!(db.iter().all(|&d| d <= eps + 1e-9 && d <= 2.0));
        assert!(ds.iter().all(|&d| d <= sw + 1e-9));
        assert!(report
            .per_block_leakage
            .iter()
            .flatten()
            .all(|&l| (0.0..=1.0).contains(&l)));
    }

    #[test]
    fn bloch_distance_routes_agree() {
        // similarity route against a dense non-Hermitian exponential via
        // the eigendecomposition of H_Bloch = Omega^{-1} H Omega
        let inst = random_instance(4, 6, 2, 0.01);
        let sol = solve_bloch_series(&inst, 1e-12, 64).unwrap();
        let g = Generator::bloch(&sol).unwrap();
        let t = 13.7;
        let d = evolution_distance(&inst, &g, t).unwrap();
        let hb = &sol.h_bloch;
        let mut term = CMat::identity(6, 6);
        let mut exp = CMat::identity(6, 6);
        let steps = 4096;
        let dt = C64::new(0.0, -t / steps as f64);
        // Taylor step of exp(-i dt H_Bloch), then repeated squaring would
        // need powers of two; plain repeated multiplication is enough here
        let mut step = CMat::identity(6, 6);
        for n in 1..20 {
            term = &term * hb * dt / C64::new(n as f64, 0.0);
            step += &term;
        }
        for _ in 0..steps {
            exp = &exp * &step;
        }
        let true_u = unitary_propagator(&herm_eig(&inst.hamiltonian()).unwrap(), t);
        let d_dense = operator_norm(&(true_u - exp));
        assert!((d - d_dense).abs() < 1e-9, "{d} vs {d_dense}");
    }

    #[test]
    fn csv_layout() {
        let inst = rabi();
        let report = run_leakage_experiment(&inst, &[0.0, 1.0], &ExperimentOptions::default()).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,k,leakage,d_bloch,d_sw");
        assert_eq!(lines.len(), 1 + 2 * 2);
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[1].ends_with(",,"));
        let value: f64 = lines[3].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(value, report.per_block_leakage[0][1]);
    }

    #[test]
    fn sweeps_and_degenerate_sweeps() {
        let inst = random_instance(9, 10, 2, 0.01);
        let times = uniform_grid(200.0, 801);
        let sweep = gamma_scaling_sweep(
            &inst,
            &[10.0, 30.0, 100.0, 300.0, 1000.0],
            &times,
            TimeScaling::PerGamma,
        )
        .unwrap();
        assert!((sweep.slope + 1.0).abs() < 0.15, "slope {}", sweep.slope);
        let free = random_instance(9, 10, 2, 0.0);
        assert!(matches!(
            gamma_scaling_sweep(&free, &[10.0, 30.0, 100.0, 1000.0], &times, TimeScaling::Fixed),
            Err(Error::DegenerateSweep(_))
        ));
        assert!(matches!(
            gamma_scaling_sweep(&inst, &[10.0, 11.0, 12.0, 13.0], &times, TimeScaling::Fixed),
            Err(Error::DegenerateSweep(_))
        ));
        let scaled = perturbation_sweep(&inst, &[0.03, 0.1, 0.3, 1.0, 3.0], &times).unwrap();
        assert!((scaled.slope - 1.0).abs() < 0.15);
    }

    fn harmonic_instance(cutoff: usize, v0: f64) -> Result<ProblemInstance> {
        let m = build_harmonic_chain(&HarmonicChainSpec {
            n_sites: 4,
            omega: 10.0,
            g: 1.0,
            fock_cutoff: cutoff,
            v0,
        })?;
        let part = partition_by_intervals(&m.h0.eig()?, &m.band_intervals)?;
        ProblemInstance::new(m.h0, m.v, 1.0, part)
    }

    #[test]
    fn truncation_study_converges() {
        let study =
            truncation_convergence_study(|c| harmonic_instance(c, 0.05), &[8, 12, 16], 50.0, 1).unwrap();
        assert!(study.differences[1] <= 1e-6, "{:?}", study.differences);
        assert!(study.converged(1e-6, 1e-12));
        let free =
            truncation_convergence_study(|c| harmonic_instance(c, 0.0), &[4, 8], 50.0, 1).unwrap();
        assert!(free.leakage.iter().all(|&l| l < 1e-12));
        assert!(matches!(
            truncation_convergence_study(|c| harmonic_instance(c, 0.05), &[3, 8], 50.0, 5),
            Err(Error::GroupNotPreserved { group: 5, cutoff: 3 })
        ));
    }
}
