//! Error type shared across the crate.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SwError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{role} is not hermitian: residual {residual:.3e} > tol {tol:.3e}")]
    NotHermitian { role: &'static str, residual: f64, tol: f64 },

    #[error("{role} is not anti-hermitian: residual {residual:.3e} > tol {tol:.3e}")]
    NotAntiHermitian { role: &'static str, residual: f64, tol: f64 },

    #[error("{role} is not unitary: residual {residual:.3e} > tol {tol:.3e}")]
    NotUnitary { role: &'static str, residual: f64, tol: f64 },

    #[error("{role} is not a projector: residual {residual:.3e} > tol {tol:.3e}")]
    NotProjector { role: &'static str, residual: f64, tol: f64 },

    #[error("matrix is not normal: commutator residual {residual:.3e} > tol {tol:.3e}")]
    NotNormal { residual: f64, tol: f64 },

    #[error("eigenvalue at arg {arg:.6} rad lies within {tol:.1e} of the branch cut")]
    BranchCutViolation { arg: f64, tol: f64 },

    #[error("no eigenvalue inside the window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("eigenvalue {eigenvalue} lies within {tol:.3e} of the window endpoint {endpoint}")]
    AmbiguousBoundary { eigenvalue: f64, endpoint: f64, tol: f64 },

    #[error("spectral gap {gap:.3e} is below the floor {floor:.3e}")]
    GapTooSmall { gap: f64, floor: f64 },

    #[error("|epsilon| = {epsilon:.6} is not below epsilon_c = {epsilon_c:.6}")]
    EpsilonTooLarge { epsilon: f64, epsilon_c: f64 },

    #[error("epsilon values differ between the two problems: {a} vs {b}")]
    EpsilonMismatch { a: f64, b: f64 },

    #[error("projector ranks differ: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },

    #[error("subspace distance {distance:.6} is too close to 1 for the direct rotation")]
    SubspacesTooFar { distance: f64 },

    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("tree is not admissible: {0}")]
    NotAdmissible(String),

    #[error("{role} does not commute with the projector: residual {residual:.3e} > tol {tol:.3e}")]
    NotBlockDiagonal { role: &'static str, residual: f64, tol: f64 },

    #[error("cross-window denominator {denom:.3e} fell below {required:.3e}")]
    InternalGap { denom: f64, required: f64 },

    #[error("low subspace energy is not scalar: spread {spread:.3e} > tol {tol:.3e}")]
    ScalarConditionViolated { spread: f64, tol: f64 },

    #[error("operator is not supported on the subset {subset}: leakage {residual:.3e}")]
    SupportMismatch { subset: String, residual: f64 },

    #[error("cluster count exceeds the cap ({count} > {cap})")]
    TooManyClusters { count: usize, cap: usize },

    #[error("total dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid input: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, SwError>;
