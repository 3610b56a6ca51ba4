//! Coarse-grained spectral partitions of an unperturbed Hamiltonian.
//!
//! A partition groups the (sorted) eigenvalues of `H0` into disjoint
//! clusters. Each cluster owns a spectral projection `P_k`, and the gap is the
//! smallest distance between eigenvalues belonging to different clusters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMat, HermitianEigenSystem, OperatorMatrix, C64};

/// Relative slack used when testing interval membership of eigenvalues.
const MEMBERSHIP_RTOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SpectralPartition {
    eig: HermitianEigenSystem,
    groups: Vec<Vec<usize>>,
    projections: Vec<CMat>,
    gap: f64,
    intervals: Vec<(f64, f64)>,
}

/// Serialized form: `{"groups": [[indices]...], "gap": eta, "intervals": [[lo,hi]...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PartitionRecord {
    pub groups: Vec<Vec<usize>>,
    pub gap: f64,
    pub intervals: Vec<[f64; 2]>,
}

impl SpectralPartition {
    /// Builds a partition from explicit index groups and computes the gap
    /// from the eigenvalues.
    pub fn from_groups(eig: HermitianEigenSystem, groups: Vec<Vec<usize>>) -> Result<Self> {
        let intervals = validate_groups(&eig, &groups)?;
        let gap = min_interval_distance(&intervals);
        if !(gap > 0.0) {
            return Err(Error::InvalidPartition(format!(
                "components touch or interleave (gap {gap})"
            )));
        }
        Ok(Self::assemble(eig, groups, intervals, gap))
    }

    /// Builds a partition that trusts a declared gap instead of recomputing
    /// it. Used when a partition is loaded from a record; a wrong declaration
    /// surfaces later as [`Error::ZeroGap`] in the Sylvester solver.
    pub fn from_parts(
        eig: HermitianEigenSystem,
        groups: Vec<Vec<usize>>,
        declared_gap: f64,
    ) -> Result<Self> {
        let intervals = validate_groups(&eig, &groups)?;
        if !(declared_gap > 0.0) || !declared_gap.is_finite() {
            return Err(Error::InvalidPartition(format!(
                "declared gap {declared_gap} must be positive"
            )));
        }
        Ok(Self::assemble(eig, groups, intervals, declared_gap))
    }

    pub fn from_record(eig: HermitianEigenSystem, record: &PartitionRecord) -> Result<Self> {
        Self::from_parts(eig, record.groups.clone(), record.gap)
    }

    fn assemble(
        eig: HermitianEigenSystem,
        groups: Vec<Vec<usize>>,
        intervals: Vec<(f64, f64)>,
        gap: f64,
    ) -> Self {
        let projections = groups
            .iter()
            .map(|g| {
                let u = eig.columns(g);
                &u * u.adjoint()
            })
            .collect();
        Self {
            eig,
            groups,
            projections,
            gap,
            intervals,
        }
    }

    pub fn eig(&self) -> &HermitianEigenSystem {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> Result<&[usize]> {
        self.check_index(k)?;
        Ok(&self.groups[k])
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn projections(&self) -> &[CMat] {
        &self.projections
    }

    /// Indices of all eigenvectors outside group `k`.
    pub fn complement_indices(&self, k: usize) -> Result<Vec<usize>> {
        self.check_index(k)?;
        let mut member = vec![false; self.dim()];
        for &i in &self.groups[k] {
            member[i] = true;
        }
        Ok((0..self.dim()).filter(|&i| !member[i]).collect())
    }

    /// Group index of each eigenvector.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.dim()];
        for (k, g) in self.groups.iter().enumerate() {
            for &i in g {
                labels[i] = k;
            }
        }
        labels
    }

    /// `P_k`.
    pub fn projection(&self, k: usize) -> Result<&CMat> {
        self.check_index(k)?;
        Ok(&self.projections[k])
    }

    /// `Q_k = 1 - P_k`.
    pub fn complement(&self, k: usize) -> Result<CMat> {
        let p = self.projection(k)?;
        Ok(CMat::identity(self.dim(), self.dim()) - p)
    }

    pub fn record(&self) -> PartitionRecord {
        PartitionRecord {
            groups: self.groups.clone(),
            gap: self.gap,
            intervals: self.intervals.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.groups.len() {
            return Err(Error::IndexOutOfRange {
                what: "group",
                index: k,
                len: self.groups.len(),
            });
        }
        Ok(())
    }
}

fn validate_groups(eig: &HermitianEigenSystem, groups: &[Vec<usize>]) -> Result<Vec<(f64, f64)>> {
    let n = eig.dim();
    if groups.len() < 2 {
        return Err(Error::InvalidPartition(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    let mut seen = vec![false; n];
    for g in groups {
        if g.is_empty() {
            return Err(Error::InvalidPartition("empty group".into()));
        }
        for &i in g {
            if i >= n {
                return Err(Error::IndexOutOfRange {
                    what: "eigenvalue",
                    index: i,
                    len: n,
                });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPartition(format!("index {i} in two groups")));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::InvalidPartition(format!("index {missing} unassigned")));
    }
    Ok(groups
        .iter()
        .map(|g| {
            g.iter().map(|&i| eig.eigenvalues[i]).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), e| (lo.min(e), hi.max(e)),
            )
        })
        .collect())
}

/// Smallest distance between two clusters; non-positive when any two overlap.
fn min_interval_distance(intervals: &[(f64, f64)]) -> f64 {
    let mut gap = f64::INFINITY;
    for (k, a) in intervals.iter().enumerate() {
        for b in &intervals[k + 1..] {
            let d = (b.0 - a.1).max(a.0 - b.1);
            gap = gap.min(d);
        }
    }
    gap
}

/// Splits the sorted spectrum wherever two neighbouring eigenvalues are more
/// than `split_threshold` apart.
pub fn partition_by_threshold(
    eig: &HermitianEigenSystem,
    split_threshold: f64,
) -> Result<SpectralPartition> {
    if !(split_threshold > 0.0) {
        return Err(Error::InvalidPartition(format!(
            "split threshold {split_threshold} must be positive"
        )));
    }
    let ev = &eig.eigenvalues;
    let mut groups = vec![vec![0]];
    for i in 1..ev.len() {
        if ev[i] - ev[i - 1] > split_threshold {
            groups.push(Vec::new());
        }
        groups.last_mut().expect("non-empty").push(i);
    }
    if groups.len() < 2 {
        return Err(Error::NoGapFound {
            threshold: split_threshold,
        });
    }
    SpectralPartition::from_groups(eig.clone(), groups)
}

/// Assigns each eigenvalue to the interval containing it. Group `k`
/// corresponds to interval `k`.
pub fn partition_by_intervals(
    eig: &HermitianEigenSystem,
    intervals: &[(f64, f64)],
) -> Result<SpectralPartition> {
    for (i, a) in intervals.iter().enumerate() {
        if !(a.0 <= a.1) {
            return Err(Error::InvalidPartition(format!(
                "interval {i} = [{}, {}] is reversed",
                a.0, a.1
            )));
        }
        for (j, b) in intervals.iter().enumerate().skip(i + 1) {
            if a.0 <= b.1 && b.0 <= a.1 {
                return Err(Error::OverlappingIntervals {
                    first: i,
                    second: j,
                });
            }
        }
    }
    let mut groups = vec![Vec::new(); intervals.len()];
    for (index, &value) in eig.eigenvalues.iter().enumerate() {
        let slack = MEMBERSHIP_RTOL * value.abs().max(1.0);
        let k = intervals
            .iter()
            .position(|&(lo, hi)| value >= lo - slack && value <= hi + slack)
            .ok_or(Error::UncoveredEigenvalue { index, value })?;
        groups[k].push(index);
    }
    if let Some(empty) = groups.iter().position(|g| g.is_empty()) {
        return Err(Error::InvalidPartition(format!(
            "interval {empty} contains no eigenvalue"
        )));
    }
    SpectralPartition::from_groups(eig.clone(), groups)
}

/// Spectral truncation `H0 P([lo, hi]) + E_anchor P(R \ [lo, hi])`.
///
/// The anchor has to coincide with an eigenvalue inside the window so no new
/// point is added to the spectrum.
pub fn truncate_spectrum(
    eig: &HermitianEigenSystem,
    window: (f64, f64),
    anchor: f64,
) -> Result<OperatorMatrix> {
    let (lo, hi) = window;
    let inside = |e: f64| e >= lo && e <= hi;
    if !eig.eigenvalues.iter().any(|&e| inside(e)) {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let tol = MEMBERSHIP_RTOL * anchor.abs().max(1.0);
    let anchored = inside(anchor)
        && eig
            .eigenvalues
            .iter()
            .any(|&e| inside(e) && (e - anchor).abs() <= tol);
    if !anchored {
        return Err(Error::AnchorOutsideWindow { anchor, lo, hi });
    }
    let m = eig.map(|e| C64::new(if inside(e) { e } else { anchor }, 0.0));
    OperatorMatrix::hermitian(crate::operator::hermitian_part(&m))
}
