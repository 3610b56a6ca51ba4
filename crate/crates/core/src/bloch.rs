//! Perturbative solution of the Bloch equations
//! `H Omega_k = Omega_k H Omega_k`, `Omega_k P_k = Omega_k`, `P_k Omega_k = P_k`
//! for `H = gamma H0 + V`.
//!
//! The wave operator is expanded as `Omega = sum_j gamma^{-j} Omega^(j)` with
//! `Omega^(0) = 1`, and every order follows from a block Sylvester equation
//! `[H0, X] = Q_k Y P_k` that is diagonal in the eigenbasis of `H0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bounds::{bloch_gamma_threshold, catalan_tail, delta_of};
use crate::error::{Error, Result};
use crate::operator::{
    matrix_serde, matrix_vec_serde, operator_norm, CMat, OperatorMatrix, C64,
};
use crate::partition::SpectralPartition;

pub const DEFAULT_SERIES_TOL: f64 = 1e-12;
pub const DEFAULT_J_MAX: usize = 64;

/// `H = gamma H0 + V` together with a spectral partition of `H0`.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub h0: OperatorMatrix,
    pub v: OperatorMatrix,
    pub gamma: f64,
    pub partition: SpectralPartition,
    v_norm: f64,
}

impl ProblemInstance {
    pub fn new(
        h0: OperatorMatrix,
        v: OperatorMatrix,
        gamma: f64,
        partition: SpectralPartition,
    ) -> Result<Self> {
        let n = h0.dim();
        for found in [v.dim(), partition.dim()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        for m in [&h0, &v] {
            if !m.is_hermitian() {
                return Err(Error::NonHermitianInput {
                    deviation: crate::operator::hermitian_deviation(m),
                    allowed: crate::operator::HERMITIAN_RTOL * crate::operator::max_abs(m),
                });
            }
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidModel(format!("gamma = {gamma} must be positive")));
        }
        let v_norm = v.norm();
        Ok(Self {
            h0,
            v,
            gamma,
            partition,
            v_norm,
        })
    }

    /// Same `H0`, `V` and partition at a different coupling.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.h0.clone(), self.v.clone(), gamma, self.partition.clone())
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn v_norm(&self) -> f64 {
        self.v_norm
    }

    pub fn eta(&self) -> f64 {
        self.partition.gap()
    }

    /// `|V| / (gamma eta)`.
    pub fn x(&self) -> f64 {
        self.v_norm / (self.gamma * self.eta())
    }

    pub fn hamiltonian(&self) -> CMat {
        self.h0.matrix() * C64::new(self.gamma, 0.0) + self.v.matrix()
    }

    pub fn bloch_threshold(&self) -> f64 {
        bloch_gamma_threshold(self.v_norm, self.eta())
    }
}

/// `X = Q_k X P_k` with `[H0, X] = Q_k Y P_k`, for `Y` in the original basis.
pub fn solve_block_sylvester(part: &SpectralPartition, k: usize, y: &CMat) -> Result<CMat> {
    let u = &part.eig().eigenvectors;
    let yt = u.adjoint() * y * u;
    let mut xt = CMat::zeros(part.dim(), part.dim());
    let cols = part.group(k)?.to_vec();
    let rows = part.complement_indices(k)?;
    divide_block(part, &rows, &cols, |a, b| yt[(a, b)], &mut xt)?;
    Ok(u * xt * u.adjoint())
}

/// Writes `Y_ab / (E_a - E_b)` into `out` for `a` in `rows`, `b` in `cols`.
fn divide_block(
    part: &SpectralPartition,
    rows: &[usize],
    cols: &[usize],
    y: impl Fn(usize, usize) -> C64,
    out: &mut CMat,
) -> Result<()> {
    let e = &part.eig().eigenvalues;
    let half_gap = part.gap() / 2.0;
    for &b in cols {
        for &a in rows {
            let difference = e[a] - e[b];
            if difference.abs() < half_gap {
                return Err(Error::ZeroGap {
                    row: a,
                    col: b,
                    difference,
                    gap: part.gap(),
                });
            }
            out[(a, b)] = y(a, b) / difference;
        }
    }
    Ok(())
}

/// `Omega^(j)` from `prior = [Omega^(0), ..., Omega^(j-1)]`, all in the
/// original basis.
pub fn bloch_recursion_step(inst: &ProblemInstance, prior: &[CMat]) -> Result<CMat> {
    let j = prior.len();
    if j == 0 {
        return Ok(CMat::identity(inst.dim(), inst.dim()));
    }
    let part = &inst.partition;
    let v = inst.v.matrix();
    let mut next = CMat::zeros(inst.dim(), inst.dim());
    for k in 0..part.num_groups() {
        let p = part.projection(k)?;
        let blocks: Vec<CMat> = prior.iter().map(|o| o * p).collect();
        let mut y = -(v * &blocks[j - 1]);
        for i in 1..j {
            y += &blocks[i] * v * &blocks[j - 1 - i];
        }
        next += solve_block_sylvester(part, k, &y)?;
    }
    Ok(next)
}

/// Summed wave operator and effective generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlochSolution {
    #[serde(with = "matrix_vec_serde")]
    pub omega_terms: Vec<CMat>,
    #[serde(with = "matrix_serde")]
    pub omega: CMat,
    #[serde(with = "matrix_vec_serde")]
    pub omega_blocks: Vec<CMat>,
    #[serde(with = "matrix_serde")]
    pub h_bloch: CMat,
    /// Truncation order `J`.
    pub order: usize,
    /// Catalan remainder bounding `|Omega - sum_{j<=J} gamma^{-j} Omega^(j)|`.
    pub tail_bound: f64,
    pub delta_bound: f64,
    /// `|Omega^(j)|` for `j = 0..=J`.
    pub term_norms: Vec<f64>,
    pub x: f64,
}

impl BlochSolution {
    /// `(pi |V| / eta)^j C_j`, the majorant of `|Omega^(j)|`.
    pub fn catalan_term_bounds(&self, v_norm: f64, eta: f64) -> Vec<f64> {
        (0..=self.order as u32)
            .map(|j| (PI * v_norm / eta).powi(j as i32) * crate::bounds::catalan_f64(j))
            .collect()
    }
}

/// Smallest order whose Catalan remainder is below `tol`.
pub fn truncation_order(x: f64, tol: f64, j_max: usize) -> Result<(usize, f64)> {
    for j in 0..=j_max {
        let tail = catalan_tail(x, j as u32)?;
        if tail < tol {
            return Ok((j, tail));
        }
    }
    Err(Error::NotConverged { tol, j_max })
}

/// Sums the series up to the order fixed by the analytic tail.
///
/// The recursion runs in the eigenbasis of `H0`, where `P_k` selects columns
/// and the Sylvester solve is a division.
pub fn solve_bloch_series(inst: &ProblemInstance, tol: f64, j_max: usize) -> Result<BlochSolution> {
    if !(tol > 0.0) {
        return Err(Error::ConfigInvalid(format!("series tolerance {tol} must be positive")));
    }
    let threshold = inst.bloch_threshold();
    if !(inst.gamma > threshold) {
        return Err(Error::GammaBelowThreshold {
            gamma: inst.gamma,
            threshold,
        });
    }
    let x = inst.x();
    let (order, tail_bound) = truncation_order(x, tol, j_max)?;
    let part = &inst.partition;
    let n = inst.dim();
    let u = &part.eig().eigenvectors;
    let vt = u.adjoint() * inst.v.matrix() * u;
    let groups = part.groups();
    let complements: Vec<Vec<usize>> = (0..groups.len())
        .map(|k| part.complement_indices(k))
        .collect::<Result<_>>()?;

    // terms[m] = Omega~^(m), products[m] = V~ Omega~^(m)
    let mut terms = vec![CMat::identity(n, n)];
    let mut products = vec![vt.clone()];
    for j in 1..=order {
        let mut next = CMat::zeros(n, n);
        for (k, cols) in groups.iter().enumerate() {
            let y = block_rhs(&terms, &products, cols, j);
            let col_of: Vec<usize> = {
                let mut pos = vec![usize::MAX; n];
                for (c, &b) in cols.iter().enumerate() {
                    pos[b] = c;
                }
                pos
            };
            divide_block(part, &complements[k], cols, |a, b| y[(a, col_of[b])], &mut next)?;
        }
        products.push(&vt * &next);
        terms.push(next);
    }

    let scale = |j: usize| C64::new(inst.gamma.powi(-(j as i32)), 0.0);
    // correction sum_{j>=1} gamma^{-j} Omega~^(j); the identity is added
    // after the basis change so that V = 0 gives Omega = 1 exactly
    let mut correction = CMat::zeros(n, n);
    for (j, t) in terms.iter().enumerate().skip(1).rev() {
        correction += t * scale(j);
    }
    let to_original = |m: &CMat| u * m * u.adjoint();
    let mut omega_terms: Vec<CMat> = vec![CMat::identity(n, n)];
    omega_terms.extend(terms.iter().skip(1).map(to_original));
    let term_norms = terms.iter().map(operator_norm).collect();
    let omega = CMat::identity(n, n) + to_original(&correction);
    let omega_blocks = part
        .projections()
        .iter()
        .map(|p| &omega * p)
        .collect::<Vec<_>>();
    let mut sol = BlochSolution {
        omega_terms,
        omega,
        omega_blocks,
        h_bloch: CMat::zeros(n, n),
        order,
        tail_bound,
        delta_bound: delta_of(x)?,
        term_norms,
        x,
    };
    sol.h_bloch = assemble_h_bloch(inst, &sol)?;
    Ok(sol)
}

/// `Q-rows, k-cols` block of `Y_k^(j)` in the eigenbasis, as an `n x |k|`
/// matrix (rows inside the group are ignored by the caller).
fn block_rhs(terms: &[CMat], products: &[CMat], cols: &[usize], j: usize) -> CMat {
    let n = terms[0].nrows();
    let m = cols.len();
    let column_block = |a: &CMat| CMat::from_fn(n, m, |r, c| a[(r, cols[c])]);
    let square_block = |a: &CMat| CMat::from_fn(m, m, |r, c| a[(cols[r], cols[c])]);
    let mut y = -column_block(&products[j - 1]);
    for i in 1..j {
        y += column_block(&terms[i]) * square_block(&products[j - 1 - i]);
    }
    y
}

/// `H_Bloch = sum_k P_k H Omega_k`.
pub fn assemble_h_bloch(inst: &ProblemInstance, sol: &BlochSolution) -> Result<CMat> {
    let h = inst.hamiltonian();
    let n = inst.dim();
    let mut out = CMat::zeros(n, n);
    for (p, block) in inst.partition.projections().iter().zip(&sol.omega_blocks) {
        out += p * &h * block;
    }
    Ok(out)
}

/// `max_k |Q_k M P_k|`.
pub fn off_block_norm(part: &SpectralPartition, m: &CMat) -> f64 {
    let n = part.dim();
    part.projections()
        .iter()
        .map(|p| operator_norm(&((CMat::identity(n, n) - p) * m * p)))
        .fold(0.0, f64::max)
}

/// Residuals of the three Bloch equations, maximised over `k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlochResiduals {
    pub invariance: f64,
    pub right_projection: f64,
    pub left_projection: f64,
}

pub fn bloch_residuals(inst: &ProblemInstance, sol: &BlochSolution) -> BlochResiduals {
    let h = inst.hamiltonian();
    let mut r = BlochResiduals::default();
    for (p, ok) in inst.partition.projections().iter().zip(&sol.omega_blocks) {
        let hk = &h * ok;
        r.invariance = r.invariance.max(operator_norm(&(&hk - ok * &h * ok)));
        r.right_projection = r.right_projection.max(operator_norm(&(ok * p - ok)));
        r.left_projection = r.left_projection.max(operator_norm(&(p * ok - p)));
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{herm_eig, invert, real_diagonal, ZERO};
    use crate::partition::{partition_by_threshold, SpectralPartition};
    use crate::suite::random_instance;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn rabi(v: f64, gamma: f64) -> ProblemInstance {
        let h0 = OperatorMatrix::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let vm = OperatorMatrix::from_real(2, &[0.0, v, v, 0.0]).unwrap();
        let eig = h0.eig().unwrap();
        let part = SpectralPartition::from_groups(eig, vec![vec![0], vec![1]]).unwrap();
        ProblemInstance::new(h0, vm, gamma, part).unwrap()
    }

    #[test]
    fn sylvester_single_division() {
        let h0 = OperatorMatrix::from_real_diagonal(&[0.0, 2.0]).unwrap();
        let part = SpectralPartition::from_groups(h0.eig().unwrap(), vec![vec![0], vec![1]]).unwrap();
        let mut y = CMat::zeros(2, 2);
        y[(1, 0)] = c(1.0);
        let x = solve_block_sylvester(&part, 0, &y).unwrap();
        assert!((x[(1, 0)] - c(0.5)).norm() < 1e-15);
        assert!(x[(0, 0)].norm() + x[(0, 1)].norm() + x[(1, 1)].norm() < 1e-15);
        let zero = solve_block_sylvester(&part, 0, &CMat::zeros(2, 2)).unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn sylvester_residual_on_seeded_instance() {
        let inst = random_instance(11, 9, 3, 0.01);
        let part = &inst.partition;
        let mut rng = crate::rng::substream(11, "sylvester-rhs");
        let y = crate::suite::random_hermitian(9, &mut rng);
        for k in 0..3 {
            let x = solve_block_sylvester(part, k, &y).unwrap();
            let p = part.projection(k).unwrap();
            let q = part.complement(k).unwrap();
            let lhs = inst.h0.matrix() * &x - &x * inst.h0.matrix();
            let rhs = &q * &y * p;
            assert!(operator_norm(&(lhs - rhs)) <= 1e-10 * operator_norm(&y));
            assert!(operator_norm(&(&q * &x * p - &x)) < 1e-12);
        }
    }

    #[test]
    fn misdeclared_gap_raises_zero_gap() {
        let inst = random_instance(5, 8, 2, 0.01);
        let eig = inst.partition.eig().clone();
        let groups = inst.partition.groups().to_vec();
        let bad = SpectralPartition::from_parts(eig, groups, 10.0 * inst.eta()).unwrap();
        let y = CMat::from_element(8, 8, c(1.0));
        let err = solve_block_sylvester(&bad, 0, &y).unwrap_err();
        assert!(matches!(err, Error::ZeroGap { .. }));
        assert_eq!(err.origin(), "bloch_solver::solve_block_sylvester");
    }

    #[test]
    fn first_order_two_level() {
        let (v, eta) = (C64::new(0.03, 0.04), 1.7);
        let h0 = OperatorMatrix::from_real_diagonal(&[0.0, eta]).unwrap();
        let vm = OperatorMatrix::hermitian(CMat::from_row_slice(
            2,
            2,
            &[c(0.0), v, v.conj(), c(0.0)],
        ))
        .unwrap();
        let part = SpectralPartition::from_groups(h0.eig().unwrap(), vec![vec![0], vec![1]]).unwrap();
        let inst = ProblemInstance::new(h0, vm, 1.0, part).unwrap();
        let o1 = bloch_recursion_step(&inst, &[CMat::identity(2, 2)]).unwrap();
        assert!((o1[(1, 0)] + v.conj() / eta).norm() < 1e-15);
        assert!((o1[(0, 1)] - v / eta).norm() < 1e-15);
        assert!(o1[(0, 0)].norm() + o1[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn first_order_matches_brute_force_division() {
        let inst = random_instance(21, 10, 3, 0.01);
        let o1 = bloch_recursion_step(&inst, &[CMat::identity(10, 10)]).unwrap();
        // brute force: vectorised Sylvester operator I (x) H0 - H0^T (x) I
        let eig = inst.partition.eig();
        let u = &eig.eigenvectors;
        let vt = u.adjoint() * inst.v.matrix() * u;
        let labels = inst.partition.labels();
        let e = &eig.eigenvalues;
        let ot = u.adjoint() * &o1 * u;
        for a in 0..10 {
            for b in 0..10 {
                let want = if labels[a] == labels[b] {
                    ZERO
                } else {
                    -vt[(a, b)] / (e[a] - e[b])
                };
                assert!((ot[(a, b)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_perturbation_gives_trivial_terms() {
        let h0 = real_diagonal(&[0.0, 0.1, 2.0, 2.2, 5.0]);
        let v = real_diagonal(&[0.01, -0.02, 0.0, 0.03, 0.01]);
        let h0 = OperatorMatrix::hermitian(h0).unwrap();
        let part = partition_by_threshold(&h0.eig().unwrap(), 1.0).unwrap();
        let inst = ProblemInstance::new(h0, OperatorMatrix::hermitian(v).unwrap(), 1.0, part).unwrap();
        let mut prior = vec![CMat::identity(5, 5)];
        for _ in 0..4 {
            let next = bloch_recursion_step(&inst, &prior).unwrap();
            assert!(next.norm() < 1e-15);
            prior.push(next);
        }
    }

    #[test]
    fn recursion_routes_agree() {
        // original-basis recursion against the eigenbasis series
        let inst = random_instance(3, 12, 3, 0.015);
        let sol = solve_bloch_series(&inst, 1e-12, 64).unwrap();
        let mut prior = vec![CMat::identity(12, 12)];
        for j in 1..=sol.order.min(6) {
            let next = bloch_recursion_step(&inst, &prior).unwrap();
            let scale = operator_norm(&next).max(1e-300);
            assert!(operator_norm(&(&next - &sol.omega_terms[j])) <= 1e-9 * scale.max(1e-12));
            prior.push(next);
        }
    }

    #[test]
    fn second_order_catalan_bound() {
        let inst = random_instance(6, 6, 2, 0.015);
        let mut prior = vec![CMat::identity(6, 6)];
        for _ in 0..2 {
            let next = bloch_recursion_step(&inst, &prior).unwrap();
            prior.push(next);
        }
        let r = PI * inst.v_norm() / inst.eta();
        assert!(operator_norm(&prior[2]) <= 2.0 * r * r);
        for (j, t) in prior.iter().enumerate().skip(1) {
            let p = &inst.partition;
            for k in 0..p.num_groups() {
                let pk = p.projection(k).unwrap();
                assert!(operator_norm(&(pk * t * pk)) < 1e-12);
            }
            let mut sum = CMat::zeros(6, 6);
            for k in 0..p.num_groups() {
                sum += p.complement(k).unwrap() * t * p.projection(k).unwrap();
            }
            assert!(operator_norm(&(sum - t)) < 1e-12, "order {j}");
        }
    }

    #[test]
    fn zero_perturbation() {
        let inst = random_instance(2, 7, 2, 0.0);
        let sol = solve_bloch_series(&inst, 1e-12, 64).unwrap();
        assert_eq!(sol.order, 0);
        assert!(operator_norm(&minus_id(&sol.omega)) < 1e-15);
        let gh0 = inst.h0.matrix() * c(inst.gamma);
        assert!(operator_norm(&(&sol.h_bloch - gh0)) < 1e-12);
    }

    fn minus_id(m: &CMat) -> CMat {
        crate::operator::minus_identity(m)
    }

    #[test]
    fn rabi_wave_operator_matches_exact_eigenvectors() {
        let inst = rabi(0.05, 1.0);
        let sol = solve_bloch_series(&inst, 1e-12, 64).unwrap();
        let exact = herm_eig(&inst.hamiltonian()).unwrap();
        let psi = &exact.eigenvectors;
        // Omega_k = psi_k e_k^T / <e_k|psi_k>
        let mut omega = CMat::zeros(2, 2);
        for k in 0..2 {
            let norm = psi[(k, k)];
            for r in 0..2 {
                omega[(r, k)] = psi[(r, k)] / norm;
            }
        }
        for (a, b) in sol.omega.iter().zip(omega.iter()) {
            assert!((a - b).norm() <= 1e-10);
        }
        let lam = &exact.eigenvalues;
        assert!((sol.h_bloch[(0, 0)] - c(lam[0])).norm() < 1e-10);
        assert!((sol.h_bloch[(1, 1)] - c(lam[1])).norm() < 1e-10);
        assert!(sol.h_bloch[(0, 1)].norm() + sol.h_bloch[(1, 0)].norm() < 1e-10);
        let closed = [
            (1.0 - (1.0f64 + 4.0 * 0.05 * 0.05).sqrt()) / 2.0,
            (1.0 + (1.0f64 + 4.0 * 0.05 * 0.05).sqrt()) / 2.0,
        ];
        assert!((lam[0] - closed[0]).abs() < 1e-14 && (lam[1] - closed[1]).abs() < 1e-14);
    }

    #[test]
    fn threshold_and_convergence_errors() {
        let inst = rabi(0.05, 1.0);
        let below = inst.with_gamma(0.99 * inst.bloch_threshold()).unwrap();
        let err = solve_bloch_series(&below, 1e-12, 64).unwrap_err();
        assert!(matches!(err, Error::GammaBelowThreshold { .. }));
        let near = inst.with_gamma(1.001 * inst.bloch_threshold()).unwrap();
        assert!(matches!(
            solve_bloch_series(&near, 1e-12, 64),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn series_invariants_on_seeded_instances() {
        for seed in 0..12 {
            let dim = 4 + (seed as usize * 5) % 20;
            let groups = 2 + seed as usize % 3;
            let inst = random_instance(seed, dim, groups, 0.018);
            let sol = solve_bloch_series(&inst, 1e-12, 64).unwrap();
            let h = inst.hamiltonian();
            let hn = operator_norm(&h);
            let tol = 10.0 * 1e-12 * hn.max(1.0);
            let r = bloch_residuals(&inst, &sol);
            assert!(r.invariance <= tol, "seed {seed}: {r:?}");
            assert!(r.right_projection <= tol && r.left_projection <= tol);

            for (norm, bound) in sol
                .term_norms
                .iter()
                .zip(sol.catalan_term_bounds(inst.v_norm(), inst.eta()))
            {
                assert!(*norm <= bound + 1e-12);
            }
            let d = sol.delta_bound;
            let slack = 1e-9;
            assert!(operator_norm(&minus_id(&sol.omega)) <= d + sol.tail_bound + slack);
            assert!(operator_norm(&sol.omega) <= 1.0 + d + slack);
            let inv = invert(&sol.omega).unwrap();
            assert!(operator_norm(&inv) <= 1.0 / (1.0 - d) + slack);
            assert!(operator_norm(&minus_id(&inv)) <= d / (1.0 - d) + slack);

            assert!(off_block_norm(&inst.partition, &sol.h_bloch) <= 1e-9 * hn);
            let commute = operator_norm(&(&h * &sol.omega - &sol.omega * &sol.h_bloch));
            assert!(commute <= 1e-9 * hn);
        }
    }

    #[test]
    fn first_order_closed_form_scaled() {
        let inst = random_instance(8, 9, 3, 0.01);
        let sol = solve_bloch_series(&inst, 1e-12, 64).unwrap();
        let u = &inst.partition.eig().eigenvectors;
        let e = &inst.partition.eig().eigenvalues;
        let labels = inst.partition.labels();
        let vt = u.adjoint() * inst.v.matrix() * u;
        let o1 = u.adjoint() * &sol.omega_terms[1] * u / c(inst.gamma);
        for a in 0..9 {
            for b in 0..9 {
                if labels[a] != labels[b] {
                    let want = -vt[(a, b)] / (inst.gamma * (e[a] - e[b]));
                    assert!((o1[(a, b)] - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn solution_json_round_trip() {
        let sol = solve_bloch_series(&rabi(0.05, 1.0), 1e-12, 64).unwrap();
        let text = serde_json::to_string(&sol).unwrap();
        let back: BlochSolution = serde_json::from_str(&text).unwrap();
        assert_eq!(back.order, sol.order);
        assert_eq!(back.omega, sol.omega);
        assert_eq!(back.term_norms, sol.term_norms);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["tail_bound"].is_number());
    }
}
