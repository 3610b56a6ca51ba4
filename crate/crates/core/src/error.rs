use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Every variant maps to the module and operation that produced it through
/// [`Error::origin`], so front ends can report provenance.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square with dim >= 1, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input is not Hermitian (max |M - M^dagger| = {deviation:e}, allowed {allowed:e})")]
    NonHermitianInput { deviation: f64, allowed: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e} <= floor {floor:e})")]
    NotPositiveDefinite { min_eigenvalue: f64, floor: f64 },

    #[error("matrix is singular or ill-conditioned (condition number {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("no spectral gap above threshold {threshold}")]
    NoGapFound { threshold: f64 },

    #[error("eigenvalue {value} (index {index}) is not covered by any interval")]
    UncoveredEigenvalue { index: usize, value: f64 },

    #[error("intervals {first} and {second} overlap")]
    OverlappingIntervals { first: usize, second: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("anchor energy {anchor} is not an eigenvalue inside the window [{lo}, {hi}]")]
    AnchorOutsideWindow { anchor: f64, lo: f64, hi: f64 },

    #[error("window [{lo}, {hi}] contains no eigenvalue")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("eigenvalue difference {difference:e} between indices {row} and {col} is below half the declared gap {gap}")]
    ZeroGap {
        row: usize,
        col: usize,
        difference: f64,
        gap: f64,
    },

    #[error("gamma = {gamma} does not exceed the Bloch threshold 4*pi*|V|/eta = {threshold}")]
    GammaBelowThreshold { gamma: f64, threshold: f64 },

    #[error("series did not reach tolerance {tol:e} within {j_max} orders")]
    NotConverged { tol: f64, j_max: usize },

    #[error("gamma = {gamma} does not exceed the Schrieffer-Wolff threshold 2*pi/(sqrt2-1)*|V|/eta = {threshold}")]
    GammaBelowSWThreshold { gamma: f64, threshold: f64 },

    #[error("block Gram matrix of group {group} is singular")]
    SingularBlockGram { group: usize },

    #[error("{function}: argument {x} outside the domain")]
    OutOfDomain { function: &'static str, x: f64 },

    #[error("bandgap estimate {value} is not positive (k = {k}, E_J/E_C = {ratio})")]
    NonpositiveBandgap { k: u32, ratio: f64, value: f64 },

    #[error("degenerate sweep: {0}")]
    DegenerateSweep(String),

    #[error("group {group} is not preserved at cutoff {cutoff}")]
    GroupNotPreserved { group: usize, cutoff: usize },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// `module::operation` that raised the error.
    pub fn origin(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } | Error::DimensionMismatch { .. } => {
                "operator_core::OperatorMatrix"
            }
            Error::NonHermitianInput { .. } => "operator_core::herm_eig",
            Error::NotPositiveDefinite { .. } => "operator_core::inv_sqrt_psd",
            Error::SingularMatrix { .. } => "operator_core::invert",
            Error::NoGapFound { .. } => "spectral_partition::partition_by_threshold",
            Error::UncoveredEigenvalue { .. } | Error::OverlappingIntervals { .. } => {
                "spectral_partition::partition_by_intervals"
            }
            Error::InvalidPartition(_) => "spectral_partition::from_groups",
            Error::IndexOutOfRange { .. } => "spectral_partition::projection",
            Error::AnchorOutsideWindow { .. } | Error::EmptyWindow { .. } => {
                "spectral_partition::truncate_spectrum"
            }
            Error::ZeroGap { .. } => "bloch_solver::solve_block_sylvester",
            Error::GammaBelowThreshold { .. } | Error::NotConverged { .. } => {
                "bloch_solver::solve_bloch_series"
            }
            Error::GammaBelowSWThreshold { .. } => "schrieffer_wolff::sw_transform",
            Error::SingularBlockGram { .. } => "schrieffer_wolff::perturbed_projection",
            Error::OutOfDomain { function, .. } => function,
            Error::NonpositiveBandgap { .. } => "models::transmon_bandgap",
            Error::DegenerateSweep(_) => "dynamics::gamma_scaling_sweep",
            Error::GroupNotPreserved { .. } => "dynamics::truncation_convergence_study",
            Error::ConfigInvalid(_) => "cli_reporting::config",
            Error::InvalidModel(_) => "models::build",
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => "cli_reporting::io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
