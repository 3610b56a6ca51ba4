//! Schrieffer-Wolff transformation `W = Omega (Omega^dagger Omega)^{-1/2}` and
//! the perturbed spectral projections.

use serde::{Deserialize, Serialize};

use crate::bloch::{BlochSolution, ProblemInstance};
use crate::bounds::sw_gamma_threshold;
use crate::error::{Error, Result};
use crate::operator::{
    hermitian_part, inv_sqrt_psd, invert, matrix_serde, matrix_vec_serde, minus_identity,
    operator_norm, CMat,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SWSolution {
    #[serde(with = "matrix_serde")]
    pub w: CMat,
    /// `W^dagger H W`, Hermitian up to rounding.
    #[serde(with = "matrix_serde")]
    pub h_sw: CMat,
    #[serde(with = "matrix_vec_serde")]
    pub perturbed_projections: Vec<CMat>,
    /// `|W - 1|`.
    pub w_distance: f64,
    /// `|P~_k - P_k|` per group.
    pub projection_distances: Vec<f64>,
    /// `max_{k != l} |P_k Omega^dagger Omega P_l|`.
    pub gram_off_block: f64,
}

pub fn sw_transform(inst: &ProblemInstance, bloch: &BlochSolution) -> Result<SWSolution> {
    let threshold = sw_gamma_threshold(inst.v_norm(), inst.eta());
    if !(inst.gamma > threshold) {
        return Err(Error::GammaBelowSWThreshold {
            gamma: inst.gamma,
            threshold,
        });
    }
    let omega = &bloch.omega;
    let gram = hermitian_part(&(omega.adjoint() * omega));
    let w = omega * inv_sqrt_psd(&gram)?;
    let h = inst.hamiltonian();
    let h_sw = w.adjoint() * &h * &w;

    let projections = inst.partition.projections();
    let mut gram_off_block = 0.0f64;
    for (k, pk) in projections.iter().enumerate() {
        for pl in &projections[k + 1..] {
            gram_off_block = gram_off_block.max(operator_norm(&(pk * &gram * pl)));
        }
    }
    let perturbed_projections = (0..projections.len())
        .map(|k| perturbed_projection(inst, bloch, k))
        .collect::<Result<Vec<_>>>()?;
    let projection_distances = perturbed_projections
        .iter()
        .zip(projections)
        .map(|(pt, p)| operator_norm(&(pt - p)))
        .collect();
    Ok(SWSolution {
        w_distance: operator_norm(&minus_identity(&w)),
        w,
        h_sw,
        perturbed_projections,
        projection_distances,
        gram_off_block,
    })
}

/// `P~_k = Omega_k (Omega_k^dagger Omega_k)^{-1} Omega_k^dagger`, the inverse
/// taken on `range(P_k)`.
pub fn perturbed_projection(
    inst: &ProblemInstance,
    bloch: &BlochSolution,
    k: usize,
) -> Result<CMat> {
    let part = &inst.partition;
    let uk = part.eig().columns(part.group(k)?);
    let b = &bloch.omega * uk;
    let gram = b.adjoint() * &b;
    let inv = invert(&gram).map_err(|_| Error::SingularBlockGram { group: k })?;
    Ok(&b * inv * b.adjoint())
}

/// `Omega_k (Omega_k^dagger Omega_k)^{-1/2}` with the root taken on
/// `range(P_k)`; equals `W P_k`.
pub fn direct_rotation(inst: &ProblemInstance, bloch: &BlochSolution, k: usize) -> Result<CMat> {
    let part = &inst.partition;
    let uk = part.eig().columns(part.group(k)?);
    let b = &bloch.omega * &uk;
    let gram = b.adjoint() * &b;
    let root = inv_sqrt_psd(&hermitian_part(&gram))
        .map_err(|_| Error::SingularBlockGram { group: k })?;
    Ok(b * root * uk.adjoint())
}
