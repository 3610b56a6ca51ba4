//! Built-in physical models: the three-site tight-binding ring, the
//! Fock-truncated harmonic chain and the transmon bandgap formulas.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMat, OperatorMatrix, C64};
use crate::rng::substream;

/// Sub-stream label for the on-site disorder of the chain.
pub const CHAIN_DISORDER_STREAM: &str = "chain-disorder";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_cells: usize,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    /// `|V|` after rescaling.
    pub disorder_strength: f64,
    pub seed: u64,
}

impl ChainSpec {
    fn validate(&self) -> Result<()> {
        if self.n_cells < 2 {
            return Err(Error::InvalidModel(format!(
                "chain needs n_cells >= 2, got {}",
                self.n_cells
            )));
        }
        if ![self.g1, self.g2, self.g3].iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidModel("chain couplings must be finite".into()));
        }
        if !(self.disorder_strength >= 0.0) || !self.disorder_strength.is_finite() {
            return Err(Error::InvalidModel(format!(
                "disorder strength {} must be finite and nonnegative",
                self.disorder_strength
            )));
        }
        Ok(())
    }
}

/// Periodic ring of `n` three-site cells and diagonal disorder `V` with
/// `|V| = disorder_strength` exactly.
pub fn build_chain(spec: &ChainSpec) -> Result<(OperatorMatrix, OperatorMatrix)> {
    spec.validate()?;
    let dim = 3 * spec.n_cells;
    let mut h0 = CMat::zeros(dim, dim);
    for j in 0..spec.n_cells {
        let s = 3 * j;
        for (a, b, g) in [
            (s, s + 1, spec.g1),
            (s + 1, s + 2, spec.g2),
            (s + 2, (s + 3) % dim, spec.g3),
        ] {
            h0[(a, b)] = C64::new(g, 0.0);
            h0[(b, a)] = C64::new(g, 0.0);
        }
    }
    let mut rng = substream(spec.seed, CHAIN_DISORDER_STREAM);
    let r: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let peak = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = if peak > 0.0 {
        spec.disorder_strength / peak
    } else {
        0.0
    };
    let diag: Vec<f64> = r.iter().map(|x| x * scale).collect();
    Ok((
        OperatorMatrix::hermitian(h0)?,
        OperatorMatrix::from_real_diagonal(&diag)?,
    ))
}

/// Bloch Hamiltonian `H(k)` of one unit cell.
pub fn chain_momentum_hamiltonian(k: f64, g1: f64, g2: f64, g3: f64) -> CMat {
    let r = |x: f64| C64::new(x, 0.0);
    let z = C64::new(0.0, 0.0);
    let w = C64::from_polar(g3, -k);
    CMat::from_row_slice(3, 3, &[z, r(g1), w, r(g1), z, r(g2), w.conj(), r(g2), z])
}

/// Roots of `E^3 - E (g1^2 + g2^2 + g3^2) - 2 g1 g2 g3 cos k = 0`, ascending.
pub fn chain_dispersion(k: f64, g1: f64, g2: f64, g3: f64) -> [f64; 3] {
    let p = g1 * g1 + g2 * g2 + g3 * g3;
    let q = 2.0 * g1 * g2 * g3 * k.cos();
    if p == 0.0 {
        return [0.0; 3];
    }
    // E = 2 sqrt(p/3) cos(theta), cos(3 theta) = (3 sqrt3 q) / (2 p^{3/2})
    let m = 2.0 * (p / 3.0).sqrt();
    let arg = (3.0 * 3f64.sqrt() * q / (2.0 * p * p.sqrt())).clamp(-1.0, 1.0);
    let theta = arg.acos() / 3.0;
    let mut roots = [0, 1, 2].map(|j| m * (theta - 2.0 * PI * j as f64 / 3.0).cos());
    roots.sort_by(f64::total_cmp);
    roots
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicChainSpec {
    pub n_sites: usize,
    pub omega: f64,
    pub g: f64,
    pub fock_cutoff: usize,
    pub v0: f64,
}

#[derive(Clone, Debug)]
pub struct HarmonicChainModel {
    pub h0: OperatorMatrix,
    pub v: OperatorMatrix,
    /// One window per Fock level, centred on `omega (k + 1/2)`.
    pub band_intervals: Vec<(f64, f64)>,
}

impl HarmonicChainSpec {
    /// Basis index of `|k, i>`.
    pub fn index(&self, k: usize, i: usize) -> usize {
        k * self.n_sites + i
    }

    pub fn dim(&self) -> usize {
        (self.fock_cutoff + 1) * self.n_sites
    }
}

/// Harmonic chain on the basis `|k, i>`, `k = 0..=fock_cutoff`, with open
/// hopping between sites and the ladder perturbation between levels.
pub fn build_harmonic_chain(spec: &HarmonicChainSpec) -> Result<HarmonicChainModel> {
    if spec.n_sites < 2 || spec.fock_cutoff < 2 {
        return Err(Error::InvalidModel(format!(
            "harmonic chain needs n_sites >= 2 and fock_cutoff >= 2, got {} and {}",
            spec.n_sites, spec.fock_cutoff
        )));
    }
    if !(spec.omega > 0.0) || !(spec.g >= 0.0) || !(spec.v0 >= 0.0) {
        return Err(Error::InvalidModel(format!(
            "harmonic chain needs omega > 0, g >= 0, v0 >= 0, got {}, {}, {}",
            spec.omega, spec.g, spec.v0
        )));
    }
    let dim = spec.dim();
    let mut h0 = CMat::zeros(dim, dim);
    let mut v = CMat::zeros(dim, dim);
    let hop = C64::new(-spec.g, 0.0);
    let ladder = C64::new(spec.v0 / 2.0, 0.0);
    for k in 0..=spec.fock_cutoff {
        for i in 0..spec.n_sites {
            let a = spec.index(k, i);
            h0[(a, a)] = C64::new(spec.omega * (k as f64 + 0.5), 0.0);
            if i + 1 < spec.n_sites {
                let b = spec.index(k, i + 1);
                h0[(a, b)] = hop;
                h0[(b, a)] = hop;
            }
            if k < spec.fock_cutoff {
                let b = spec.index(k + 1, i);
                v[(a, b)] = ladder;
                v[(b, a)] = ladder;
            }
        }
    }
    let half_width = 2.0 * spec.g + 0.25 * (spec.omega - 4.0 * spec.g).max(0.0);
    let band_intervals = (0..=spec.fock_cutoff)
        .map(|k| {
            let c = spec.omega * (k as f64 + 0.5);
            (c - half_width, c + half_width)
        })
        .collect();
    Ok(HarmonicChainModel {
        h0: OperatorMatrix::hermitian(h0)?,
        v: OperatorMatrix::hermitian(v)?,
        band_intervals,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpec {
    pub ej_over_ec: f64,
    pub transparency_d: f64,
}

/// Asymptotic estimate of the `k`th transmon bandgap in units of `E_C`,
/// truncated after the `(E_J / 2 E_C)^{-1}` term.
pub fn transmon_bandgap(k: u32, ej_over_ec: f64) -> Result<f64> {
    let kf = k as f64;
    let a = (ej_over_ec / 2.0).sqrt();
    let c1 = 3.0 / 32.0 + 3.0 / 32.0 * (2.0 * kf + 1.0) + (3.0 * kf * kf + 3.0 * kf + 1.0) / 16.0;
    let c2 = 3.0 / 256.0
        + (2.0 * kf + 1.0) / 16.0
        + 5.0 / 128.0 * (3.0 * kf * kf + 3.0 * kf + 1.0)
        + 5.0 / 256.0 * (4.0 * kf.powi(3) + 5.0 * kf * kf + 4.0 * kf + 1.0);
    let value = 4.0 * a - 1.0 - kf - c1 / a - c2 / (a * a);
    if !(value > 0.0) {
        return Err(Error::NonpositiveBandgap {
            k,
            ratio: ej_over_ec,
            value,
        });
    }
    Ok(value)
}

/// Bound `E_J D / (8 (1 - D/2))` on the transparency perturbation, in units
/// of `E_C`.
pub fn transmon_perturbation_norm(ej_over_ec: f64, transparency_d: f64) -> f64 {
    ej_over_ec * transparency_d / (8.0 * (1.0 - transparency_d / 2.0))
}
