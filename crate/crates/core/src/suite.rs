//! Seeded random instances and the invariant suite run by `verify` and the
//! acceptance gate.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{
    bloch_residuals, off_block_norm, solve_bloch_series, BlochSolution, ProblemInstance,
};
use crate::bounds::{catalan_f64, sw_condition_holds};
use crate::dynamics::leakage_series;
use crate::error::Result;
use crate::operator::{
    herm_eig, invert, minus_identity, operator_norm, CMat, OperatorMatrix, C64,
};
use crate::partition::{partition_by_threshold, SpectralPartition};
use crate::rng::substream;
use crate::sw::{direct_rotation, perturbed_projection, sw_transform, SWSolution};

/// Spacing between cluster centres; clusters have width at most 1.
const CLUSTER_SPACING: f64 = 3.0;

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    a.qr().q()
}

/// Random `H0` with `n_groups` eigenvalue clusters and a random Hermitian
/// `V` scaled so that `|V| / (gamma eta) = x` with `gamma = 1`.
///
/// Panics if `n_groups > dim` or `n_groups < 2`.
pub fn random_instance(seed: u64, dim: usize, n_groups: usize, x: f64) -> ProblemInstance {
    assert!((2..=dim).contains(&n_groups));
    let mut rng = substream(seed, "random-instance");
    let mut sizes = vec![1usize; n_groups];
    for _ in n_groups..dim {
        sizes[rng.random_range(0..n_groups)] += 1;
    }
    let mut energies = Vec::with_capacity(dim);
    for (g, &size) in sizes.iter().enumerate() {
        let centre = CLUSTER_SPACING * g as f64;
        for _ in 0..size {
            energies.push(centre + rng.random_range(-0.5..0.5));
        }
    }
    let u = random_unitary(dim, &mut rng);
    let d = crate::operator::real_diagonal(&energies);
    let h0 = OperatorMatrix::hermitian(crate::operator::hermitian_part(&(&u * d * u.adjoint())))
        .expect("unitary conjugate of a real diagonal is Hermitian");
    let part = partition_by_threshold(&h0.eig().expect("Hermitian"), 1.0)
        .expect("clusters are separated by at least 2");
    let raw = random_hermitian(dim, &mut rng);
    let norm = operator_norm(&raw);
    let v = raw * C64::new(x * part.gap() / norm, 0.0);
    let v = OperatorMatrix::hermitian(v).expect("scaled Hermitian");
    ProblemInstance::new(h0, v, 1.0, part).expect("consistent dimensions")
}

/// One invariant measured on one instance: `value <= limit` passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl InvariantCheck {
    fn new(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    /// `limit - value`.
    pub fn slack(&self) -> f64 {
        self.limit - self.value
    }
}

/// Absolute slack for the operator inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-9;

/// All invariants of one solved instance.
pub fn check_instance(inst: &ProblemInstance, series_tol: f64) -> Result<Vec<InvariantCheck>> {
    let bloch = solve_bloch_series(inst, series_tol, crate::bloch::DEFAULT_J_MAX)?;
    let mut out = bloch_checks(inst, &bloch, series_tol);
    if sw_condition_holds(inst.x()) {
        let sw = sw_transform(inst, &bloch)?;
        out.extend(sw_checks(inst, &bloch, &sw)?);
    }
    out.extend(linear_bound_checks(inst)?);
    Ok(out)
}

fn bloch_checks(inst: &ProblemInstance, sol: &BlochSolution, tol: f64) -> Vec<InvariantCheck> {
    let h = inst.hamiltonian();
    let hn = operator_norm(&h);
    let res = bloch_residuals(inst, sol);
    let res_limit = 10.0 * tol * hn.max(1.0);
    let d = sol.delta_bound;
    let s = INEQUALITY_SLACK;
    let mut out = vec![
        InvariantCheck::new("bloch_residual_invariance", res.invariance, res_limit),
        InvariantCheck::new("bloch_residual_right", res.right_projection, res_limit),
        InvariantCheck::new("bloch_residual_left", res.left_projection, res_limit),
        InvariantCheck::new(
            "omega_minus_identity_le_delta",
            operator_norm(&minus_identity(&sol.omega)),
            d + sol.tail_bound + s,
        ),
        InvariantCheck::new("omega_le_1_plus_delta", operator_norm(&sol.omega), 1.0 + d + s),
    ];
    match invert(&sol.omega) {
        Ok(inv) => {
            out.push(InvariantCheck::new(
                "omega_inverse_le",
                operator_norm(&inv),
                1.0 / (1.0 - d) + s,
            ));
            out.push(InvariantCheck::new(
                "omega_inverse_minus_identity_le",
                operator_norm(&minus_identity(&inv)),
                d / (1.0 - d) + s,
            ));
        }
        Err(_) => out.push(InvariantCheck::new("omega_invertible", 1.0, 0.0)),
    }
    let r = std::f64::consts::PI * inst.v_norm() / inst.eta();
    let worst = sol
        .term_norms
        .iter()
        .enumerate()
        .map(|(j, n)| n - r.powi(j as i32) * catalan_f64(j as u32))
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(InvariantCheck::new("catalan_term_bounds", worst, 1e-12));
    out.push(InvariantCheck::new(
        "h_bloch_block_diagonal",
        off_block_norm(&inst.partition, &sol.h_bloch),
        1e-9 * hn,
    ));
    out.push(InvariantCheck::new(
        "h_bloch_intertwining",
        operator_norm(&(&h * &sol.omega - &sol.omega * &sol.h_bloch)),
        1e-9 * hn,
    ));
    out.push(InvariantCheck::new(
        "h_bloch_isospectral",
        nonhermitian_spectrum_distance(&sol.h_bloch, &h, &inst.partition),
        1e-8 * hn,
    ));
    out
}

/// Distance between the sorted spectra of the block-diagonal `H_Bloch` and of
/// `H`, using the complex Schur form of each diagonal block in the `H0`
/// eigenbasis. The eigenvalues are real up to rounding by similarity with `H`.
fn nonhermitian_spectrum_distance(h_bloch: &CMat, h: &CMat, part: &SpectralPartition) -> f64 {
    let u = &part.eig().eigenvectors;
    let ht = u.adjoint() * h_bloch * u;
    let mut ev = Vec::with_capacity(h.nrows());
    for g in part.groups() {
        let block = CMat::from_fn(g.len(), g.len(), |r, c| ht[(g[r], g[c])]);
        let (_, t) = block.schur().unpack();
        ev.extend(t.diagonal().iter().map(|z| z.re));
    }
    ev.sort_by(f64::total_cmp);
    let exact = herm_eig(h).map(|e| e.eigenvalues).unwrap_or_default();
    ev.iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn sw_checks(
    inst: &ProblemInstance,
    bloch: &BlochSolution,
    sw: &SWSolution,
) -> Result<Vec<InvariantCheck>> {
    let h = inst.hamiltonian();
    let hn = operator_norm(&h);
    let n = inst.dim();
    let id = CMat::identity(n, n);
    let d = bloch.delta_bound;
    let s = INEQUALITY_SLACK;
    let q = 1.0 - 2.0 * d - d * d;
    let gram = bloch.omega.adjoint() * &bloch.omega;
    let gram_inv_sqrt = crate::operator::inv_sqrt_psd(&gram)?;
    let sw_spec = herm_eig(&crate::operator::hermitian_part(&sw.h_sw))?.eigenvalues;
    let h_spec = herm_eig(&h)?.eigenvalues;
    let iso = sw_spec
        .iter()
        .zip(&h_spec)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut rotation = 0.0f64;
    let mut proj_herm = 0.0f64;
    let mut proj_idem = 0.0f64;
    let mut proj_comm = 0.0f64;
    for k in 0..inst.partition.num_groups() {
        let p = inst.partition.projection(k)?;
        let direct = direct_rotation(inst, bloch, k)?;
        rotation = rotation.max(operator_norm(&(&sw.w * p - direct)));
        let pt = perturbed_projection(inst, bloch, k)?;
        proj_herm = proj_herm.max(operator_norm(&(&pt - pt.adjoint())));
        proj_idem = proj_idem.max(operator_norm(&(&pt * &pt - &pt)));
        proj_comm = proj_comm.max(operator_norm(&(&h * &pt - &pt * &h)));
    }
    Ok(vec![
        InvariantCheck::new(
            "w_unitary_left",
            operator_norm(&(sw.w.adjoint() * &sw.w - &id)),
            1e-10,
        ),
        InvariantCheck::new(
            "w_unitary_right",
            operator_norm(&(&sw.w * sw.w.adjoint() - &id)),
            1e-10,
        ),
        InvariantCheck::new(
            "h_sw_hermitian",
            operator_norm(&(&sw.h_sw - sw.h_sw.adjoint())),
            1e-10 * hn,
        ),
        InvariantCheck::new(
            "h_sw_block_diagonal",
            off_block_norm(&inst.partition, &sw.h_sw),
            1e-9 * hn,
        ),
        InvariantCheck::new("h_sw_isospectral", iso, 1e-8 * hn),
        InvariantCheck::new(
            "gram_minus_identity_le",
            operator_norm(&(&gram - &id)),
            2.0 * d + d * d + s,
        ),
        InvariantCheck::new(
            "gram_inv_sqrt_le",
            operator_norm(&gram_inv_sqrt),
            q.powf(-0.5) + s,
        ),
        InvariantCheck::new(
            "gram_inv_sqrt_minus_identity_le",
            operator_norm(&(&gram_inv_sqrt - &id)),
            q.powf(-0.5) - 1.0 + s,
        ),
        InvariantCheck::new(
            "w_minus_identity_le",
            operator_norm(&minus_identity(&sw.w)),
            crate::bounds::w_distance_bound(d).unwrap_or(f64::INFINITY) + s,
        ),
        InvariantCheck::new("direct_rotation_identity", rotation, 1e-9),
        InvariantCheck::new("perturbed_projection_hermitian", proj_herm, 1e-10),
        InvariantCheck::new("perturbed_projection_idempotent", proj_idem, 1e-10),
        InvariantCheck::new("perturbed_projection_commutes", proj_comm, 1e-9 * hn),
    ])
}

/// Linear leakage bound on a coarse grid, valid for any gamma.
fn linear_bound_checks(inst: &ProblemInstance) -> Result<Vec<InvariantCheck>> {
    let linear = 9.0 * std::f64::consts::PI * inst.x();
    if linear > 2.0 {
        return Ok(Vec::new());
    }
    let hn = operator_norm(&inst.hamiltonian()).max(1.0);
    let t_max = 1e3 / hn;
    let times: Vec<f64> = (0..400).map(|i| t_max * i as f64 / 399.0).collect();
    let series = leakage_series(inst, &times)?;
    let worst = series
        .iter()
        .flat_map(|row| row.iter().copied())
        .fold(0.0, f64::max);
    Ok(vec![InvariantCheck::new(
        "linear_leakage_bound",
        worst,
        linear + 1e-9,
    )])
}

/// Parameters of the seeded random batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub seed: u64,
    pub instances: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub groups_min: usize,
    pub groups_max: usize,
    /// Upper end of the sampled `x`; values are drawn from `(0, x_max)`.
    pub x_max: f64,
    pub series_tol: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 100,
            dim_min: 4,
            dim_max: 32,
            groups_min: 2,
            groups_max: 4,
            x_max: 0.02,
            series_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub index: usize,
    pub dim: usize,
    pub groups: usize,
    pub x: f64,
    pub checks: Vec<InvariantCheck>,
    pub error: Option<String>,
}

impl InstanceOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

/// Per-invariant aggregate over a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    pub name: String,
    pub evaluated: usize,
    pub failures: usize,
    /// Smallest `limit - value` seen.
    pub min_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub params: SuiteParams,
    pub instances: Vec<InstanceOutcome>,
    pub invariants: Vec<InvariantSummary>,
    pub failures: usize,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn from_outcomes(params: SuiteParams, instances: Vec<InstanceOutcome>) -> Self {
        let mut invariants: Vec<InvariantSummary> = Vec::new();
        for check in instances.iter().flat_map(|o| &o.checks) {
            let entry = match invariants.iter_mut().position(|s| s.name == check.name) {
                Some(i) => &mut invariants[i],
                None => {
                    invariants.push(InvariantSummary {
                        name: check.name.clone(),
                        evaluated: 0,
                        failures: 0,
                        min_slack: f64::INFINITY,
                    });
                    invariants.last_mut().expect("just pushed")
                }
            };
            entry.evaluated += 1;
            entry.failures += usize::from(!check.passed);
            entry.min_slack = entry.min_slack.min(check.slack());
        }
        let failures = instances.iter().filter(|o| !o.passed()).count();
        Self {
            params,
            instances,
            invariants,
            failures,
        }
    }
}

/// Instance shape `(dim, groups, x)` for index `i` of the batch.
pub fn instance_shape(params: &SuiteParams, index: usize) -> (usize, usize, f64) {
    let mut rng = substream(params.seed, &format!("suite-shape-{index}"));
    let dim = rng.random_range(params.dim_min..=params.dim_max);
    let groups = rng.random_range(params.groups_min..=params.groups_max.min(dim));
    let x = rng.random_range(0.0..params.x_max);
    (dim, groups, x)
}

/// Runs every invariant on the seeded random batch.
pub fn run_suite(params: SuiteParams) -> SuiteReport {
    let outcomes: Vec<InstanceOutcome> = (0..params.instances)
        .into_par_iter()
        .map(|index| {
            let (dim, groups, x) = instance_shape(&params, index);
            let seed = params.seed.wrapping_mul(1_000_003).wrapping_add(index as u64);
            let inst = random_instance(seed, dim, groups, x);
            let (checks, error) = match check_instance(&inst, params.series_tol) {
                Ok(c) => (c, None),
                Err(e) => (Vec::new(), Some(format!("{}: {e}", e.origin()))),
            };
            InstanceOutcome {
                index,
                dim,
                groups,
                x,
                checks,
                error,
            }
        })
        .collect();
    SuiteReport::from_outcomes(params, outcomes)
}

/// Invariants of a single configured instance.
pub fn run_on_instance(inst: &ProblemInstance, series_tol: f64) -> InstanceOutcome {
    let (checks, error) = match check_instance(inst, series_tol) {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(format!("{}: {e}", e.origin()))),
    };
    InstanceOutcome {
        index: 0,
        dim: inst.dim(),
        groups: inst.partition.num_groups(),
        x: inst.x(),
        checks,
        error,
    }
}
