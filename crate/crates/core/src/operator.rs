//! Dense complex matrix engine.
//!
//! Everything downstream works with [`CMat`] (a dynamically sized complex
//! matrix) and with the validated [`OperatorMatrix`] newtype for the inputs
//! of a problem. Norms go through a full singular value decomposition and all
//! Hermitian matrix functions go through [`herm_eig`].

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Relative tolerance of the Hermiticity check performed on construction.
pub const HERMITIAN_RTOL: f64 = 1e-12;
/// Eigenvalues of a positive definite input must exceed this floor.
pub const PSD_FLOOR: f64 = 1e-12;
/// Largest condition number accepted by [`invert`].
pub const COND_MAX: f64 = 1e12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// A square complex matrix together with a Hermiticity hint.
///
/// When the hint is set the matrix was checked to satisfy
/// `max |M - M^dagger| <= 1e-12 * max |M|`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: CMat,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps a general square matrix without a Hermiticity claim.
    pub fn new(entries: CMat) -> Result<Self> {
        check_square(&entries)?;
        Ok(Self {
            entries,
            hermitian: false,
        })
    }

    /// Wraps a matrix that must be Hermitian.
    pub fn hermitian(entries: CMat) -> Result<Self> {
        check_square(&entries)?;
        let deviation = hermitian_deviation(&entries);
        let allowed = HERMITIAN_RTOL * max_abs(&entries);
        if deviation > allowed {
            return Err(Error::NonHermitianInput { deviation, allowed });
        }
        Ok(Self {
            entries,
            hermitian: true,
        })
    }

    pub fn from_real(dim: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: row_major.len(),
            });
        }
        let m = CMat::from_row_iterator(dim, dim, row_major.iter().map(|&x| C64::new(x, 0.0)));
        Self::hermitian(m.clone()).or_else(|_| Self::new(m))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self::hermitian(CMat::from_diagonal(&d))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMat::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: CMat::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat {
        self.entries
    }

    pub fn norm(&self) -> f64 {
        operator_norm(&self.entries)
    }

    pub fn eig(&self) -> Result<HermitianEigenSystem> {
        if !self.hermitian {
            let deviation = hermitian_deviation(&self.entries);
            return Err(Error::NonHermitianInput {
                deviation,
                allowed: HERMITIAN_RTOL * max_abs(&self.entries),
            });
        }
        herm_eig(&self.entries)
    }
}

impl Deref for OperatorMatrix {
    type Target = CMat;

    fn deref(&self) -> &CMat {
        &self.entries
    }
}

fn check_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(M + M^dagger) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Largest singular value, as the root of the top eigenvalue of the smaller
/// Gram matrix. The absolute eigenvalue error is `O(eps |M|^2)`, so the
/// result keeps full relative precision.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() < m.ncols() {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    let top = hermitian_part(&gram)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0, f64::max);
    top.max(0.0).sqrt()
}

/// `A B` through real matrix products, which reach the tuned `f64` kernel.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `M - 1`.
pub fn minus_identity(m: &CMat) -> CMat {
    m - CMat::identity(m.nrows(), m.ncols())
}

/// `A B - B A`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Eigendecomposition `M = U diag(lambda) U^dagger` of a Hermitian matrix,
/// eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
    pub source_dim: usize,
}

impl HermitianEigenSystem {
    pub fn dim(&self) -> usize {
        self.source_dim
    }

    /// `U f(lambda) U^dagger`.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> CMat {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = f(lam);
            for x in scaled.column_mut(j).iter_mut() {
                *x *= fj;
            }
        }
        matmul(&scaled, &u.adjoint())
    }

    pub fn reconstruct(&self) -> CMat {
        self.map(|l| C64::new(l, 0.0))
    }

    /// Columns of `U` selected by `indices`.
    pub fn columns(&self, indices: &[usize]) -> CMat {
        self.eigenvectors.select_columns(indices)
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// The input is checked for Hermiticity and then symmetrized so the
/// decomposition sees an exactly Hermitian matrix.
pub fn herm_eig(m: &CMat) -> Result<HermitianEigenSystem> {
    check_square(m)?;
    let deviation = hermitian_deviation(m);
    let allowed = HERMITIAN_RTOL * max_abs(m);
    if deviation > allowed {
        return Err(Error::NonHermitianInput { deviation, allowed });
    }
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = eig.eigenvectors.select_columns(&order);
    Ok(HermitianEigenSystem {
        eigenvalues,
        eigenvectors,
        source_dim: n,
    })
}

/// `exp(-i t M)` for the matrix whose decomposition is `eig`.
pub fn unitary_propagator(eig: &HermitianEigenSystem, t: f64) -> CMat {
    eig.map(|lam| C64::from_polar(1.0, -lam * t))
}

/// `M^(-1/2)` of a Hermitian positive definite matrix.
pub fn inv_sqrt_psd(m: &CMat) -> Result<CMat> {
    inv_sqrt_psd_with_floor(m, PSD_FLOOR)
}

pub fn inv_sqrt_psd_with_floor(m: &CMat, floor: f64) -> Result<CMat> {
    let eig = herm_eig(m)?;
    check_positive(&eig, floor)?;
    Ok(eig.map(|lam| C64::new(lam.sqrt().recip(), 0.0)))
}

/// `M^(1/2)` of a Hermitian positive definite matrix.
pub fn sqrt_psd(m: &CMat) -> Result<CMat> {
    let eig = herm_eig(m)?;
    check_positive(&eig, PSD_FLOOR)?;
    Ok(eig.map(|lam| C64::new(lam.sqrt(), 0.0)))
}

fn check_positive(eig: &HermitianEigenSystem, floor: f64) -> Result<()> {
    let min_eigenvalue = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min_eigenvalue <= floor {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue,
            floor,
        });
    }
    Ok(())
}

/// Condition number `sigma_max / sigma_min` (infinite for singular input).
pub fn condition_number(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn invert(m: &CMat) -> Result<CMat> {
    invert_with_cond_max(m, COND_MAX)
}

pub fn invert_with_cond_max(m: &CMat, cond_max: f64) -> Result<CMat> {
    check_square(m)?;
    let condition = condition_number(m);
    if !(condition <= cond_max) {
        return Err(Error::SingularMatrix { condition });
    }
    m.clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix { condition })
}

/// Real diagonal matrix as a complex matrix.
pub fn real_diagonal(values: &[f64]) -> CMat {
    let d = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
    CMat::from_diagonal(&d)
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

/// Row-major `{"dim": n, "entries": [[re, im], ...]}` encoding.
pub fn matrix_to_json_value(m: &CMat) -> serde_json::Value {
    serde_json::to_value(repr_of(m)).expect("matrix encoding is infallible")
}

fn repr_of(m: &CMat) -> MatrixRepr {
    let n = m.nrows();
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            entries.push([z.re, z.im]);
        }
    }
    MatrixRepr { dim: n, entries }
}

fn matrix_from_repr(r: MatrixRepr) -> Result<CMat> {
    if r.entries.len() != r.dim * r.dim {
        return Err(Error::DimensionMismatch {
            expected: r.dim * r.dim,
            found: r.entries.len(),
        });
    }
    Ok(CMat::from_row_iterator(
        r.dim,
        r.dim,
        r.entries.into_iter().map(|[re, im]| C64::new(re, im)),
    ))
}

pub fn matrix_from_json_value(v: serde_json::Value) -> Result<CMat> {
    let r: MatrixRepr = serde_json::from_value(v)?;
    matrix_from_repr(r)
}

/// Serde adapter for fields of type [`CMat`].
pub mod matrix_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        repr_of(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        matrix_from_repr(r).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<CMat>`.
pub mod matrix_vec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let reprs: Vec<MatrixRepr> = ms.iter().map(repr_of).collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMat>, D::Error> {
        let reprs = Vec::<MatrixRepr>::deserialize(d)?;
        reprs
            .into_iter()
            .map(|r| matrix_from_repr(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl Serialize for OperatorMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        repr_of(&self.entries).serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorMatrix {
    /// The encoding carries no Hermiticity flag; it is set when the decoded
    /// matrix passes the check.
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = matrix_serde::deserialize(d)?;
        OperatorMatrix::hermitian(m.clone())
            .or_else(|_| OperatorMatrix::new(m))
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(n: usize, rng: &mut impl Rng) -> CMat {
        CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        hermitian_part(&random_matrix(n, &mut rng))
    }

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&CMat::identity(2, 2)) - 1.0).abs() < 1e-15);
        assert!((operator_norm(&real_diagonal(&[3.0, -5.0])) - 5.0).abs() < 1e-14);
        let jordan = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!((operator_norm(&jordan) - 1.0).abs() < 1e-15);
        assert_eq!(operator_norm(&CMat::zeros(3, 3)), 0.0);
    }

    #[test]
    fn herm_eig_diagonal_is_a_permutation() {
        let e = herm_eig(&real_diagonal(&[2.0, -1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0]);
        assert!((e.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((e.eigenvectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
        assert!(e.eigenvectors[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn herm_eig_pauli_x() {
        let e = herm_eig(&pauli_x()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        // (1, -1)/sqrt2 and (1, 1)/sqrt2 up to phase
        let v0 = e.eigenvectors.column(0);
        let v1 = e.eigenvectors.column(1);
        assert!(((v0[0] * v0[1].conj()).re + 0.5).abs() < 1e-14);
        assert!(((v1[0] * v1[1].conj()).re - 0.5).abs() < 1e-14);
        assert!((v0[0].norm() - s).abs() < 1e-14);
    }

    #[test]
    fn herm_eig_random_reconstruction() {
        let m = random_hermitian(8, 7);
        let e = herm_eig(&m).unwrap();
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let u = &e.eigenvectors;
        let unitarity = operator_norm(&minus_identity(&(u.adjoint() * u)));
        assert!(unitarity <= 1e-12, "{unitarity}");
        let residual = operator_norm(&(e.reconstruct() - &m));
        assert!(residual <= 1e-10 * operator_norm(&m).max(1.0), "{residual}");
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(herm_eig(&m), Err(Error::NonHermitianInput { .. })));
        assert!(matches!(
            OperatorMatrix::hermitian(m),
            Err(Error::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn propagator_examples() {
        let e = herm_eig(&random_hermitian(5, 3)).unwrap();
        let u0 = unitary_propagator(&e, 0.0);
        assert!(operator_norm(&minus_identity(&u0)) < 1e-13);

        let e = herm_eig(&real_diagonal(&[0.0, PI])).unwrap();
        let u = unitary_propagator(&e, 1.0);
        assert!(operator_norm(&(u - real_diagonal(&[1.0, -1.0]))) < 1e-15);

        // exp(-i pi/2 X) = cos(pi/2) 1 - i sin(pi/2) X = -i X
        let e = herm_eig(&pauli_x()).unwrap();
        let u = unitary_propagator(&e, PI / 2.0);
        let expected = pauli_x() * c(0.0, -1.0);
        assert!(operator_norm(&(u - expected)) < 1e-14);
    }

    #[test]
    fn propagator_group_property() {
        let e = herm_eig(&random_hermitian(6, 11)).unwrap();
        for &t in &[0.3, 2.0, 17.5] {
            let p = unitary_propagator(&e, t) * unitary_propagator(&e, -t);
            assert!(operator_norm(&minus_identity(&p)) <= 1e-10);
            let u = unitary_propagator(&e, t);
            assert!(operator_norm(&minus_identity(&(u.adjoint() * &u))) <= 1e-10);
        }
    }

    #[test]
    fn inv_sqrt_examples() {
        let r = inv_sqrt_psd(&CMat::identity(3, 3)).unwrap();
        assert!(operator_norm(&minus_identity(&r)) < 1e-15);
        let r = inv_sqrt_psd(&real_diagonal(&[4.0, 9.0])).unwrap();
        assert!(operator_norm(&(r - real_diagonal(&[0.5, 1.0 / 3.0]))) < 1e-15);
        assert!(matches!(
            inv_sqrt_psd(&real_diagonal(&[1.0, 0.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            inv_sqrt_psd(&real_diagonal(&[1.0, -2.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn inv_sqrt_residual_on_random_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = CMat::identity(6, 6) + random_matrix(6, &mut rng).scale(0.1);
        let gram = a.adjoint() * &a;
        let r = inv_sqrt_psd(&gram).unwrap();
        let residual = operator_norm(&minus_identity(&(&r * &gram * &r)));
        assert!(residual <= 1e-10, "{residual}");
        assert!(hermitian_deviation(&r) < 1e-12);
        let s = sqrt_psd(&gram).unwrap();
        assert!(operator_norm(&(&s * &s - &gram)) <= 1e-12);
    }

    #[test]
    fn invert_examples() {
        let inv = invert(&CMat::identity(4, 4)).unwrap();
        assert!(operator_norm(&minus_identity(&inv)) < 1e-15);
        let inv = invert(&real_diagonal(&[2.0, 4.0])).unwrap();
        assert!(operator_norm(&(inv - real_diagonal(&[0.5, 0.25]))) < 1e-15);
        assert!(matches!(
            invert(&real_diagonal(&[1.0, 0.0])),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(matches!(
            invert(&real_diagonal(&[1.0, 1e-14])),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn invert_matches_neumann_series() {
        // Omega = 1 + D with |D| = 0.2: inverse is sum_n (1 - Omega)^n
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = random_matrix(6, &mut rng);
        let d = d.scale(0.2 / operator_norm(&d));
        let omega = CMat::identity(6, 6) + &d;
        let mut neumann = CMat::identity(6, 6);
        let mut power = CMat::identity(6, 6);
        let step = -&d;
        for _ in 0..200 {
            power = &power * &step;
            neumann += &power;
        }
        let inv = invert(&omega).unwrap();
        assert!(operator_norm(&(inv - neumann)) <= 1e-8);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = random_hermitian(4, 21).scale(1.0 / 3.0);
        let v = matrix_to_json_value(&m);
        let text = serde_json::to_string(&v).unwrap();
        let back = matrix_from_json_value(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(m, back);
        let op: OperatorMatrix = serde_json::from_str(&text).unwrap();
        assert!(op.is_hermitian());
        assert_eq!(serde_json::to_string(&op).unwrap(), text);
    }

    #[test]
    fn json_rejects_bad_length() {
        let v = serde_json::json!({"dim": 2, "entries": [[1.0, 0.0]]});
        assert!(matches!(
            matrix_from_json_value(v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn norm_is_submultiplicative(seed in 0u64..10_000, n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(n, &mut rng);
            let b = random_matrix(n, &mut rng);
            prop_assert!(operator_norm(&(&a * &b)) <= operator_norm(&a) * operator_norm(&b) + 1e-12);
        }

        #[test]
        fn inv_sqrt_norm_bound_near_identity(seed in 0u64..10_000, d in 0.01f64..0.9) {
            // |M - 1| <= d < 1  =>  |M^(-1/2)| <= (1 - d)^(-1/2)
            let h = random_hermitian(5, seed);
            let h = h.scale(d / operator_norm(&h));
            let m = CMat::identity(5, 5) + h;
            let r = inv_sqrt_psd(&m).unwrap();
            prop_assert!(operator_norm(&r) <= (1.0 - d).powf(-0.5) + 1e-10);
        }
    }
}
