//! Pinned numerical tolerances.
//!
//! Every comparison threshold used by the library lives here so the numbers
//! are set in one place. Structural checks use a relative scale with a floor
//! of one, `scale(X) = max(1, ||X||_F / dim)`, so that tiny matrices are
//! checked absolutely and large ones relatively.

/// Structural claims (hermitian, unitary, projector, normality): residual
/// must stay below `TOL_STRUCT * scale(X)`.
pub const TOL_STRUCT: f64 = 1e-10;

/// Eigendecomposition residual `||X V - V diag|| <= TOL_EIG * scale(X)`.
pub const TOL_EIG: f64 = 1e-9;

/// Minimum angular distance (radians) of any eigenvalue from the principal
/// branch cut of sqrt/log.
pub const TOL_BRANCH: f64 = 1e-6;

/// Rotation and transformation identities (U P U^dag = P0, block structure
/// of generators, simplified-form agreement).
pub const TOL_ROT: f64 = 1e-9;

/// Spectral gaps below `GAP_FLOOR_REL * max(1, ||H0||)` are refused.
pub const GAP_FLOOR_REL: f64 = 1e-8;

/// Eigenvalues closer than `TOL_WINDOW_REL * max(1, ||H0||)` to a window
/// endpoint make the in/out classification ambiguous and are refused.
pub const TOL_WINDOW_REL: f64 = 1e-9;

/// Support-decomposition terms with operator norm below
/// `TOL_SUPPORT * scale` are dropped as numerically zero.
pub const TOL_SUPPORT: f64 = 1e-12;

/// Maximum order of the global perturbative recursion and the diagram
/// enumeration.
pub const MAX_ORDER_GLOBAL: usize = 10;

/// Maximum order of the local (lattice) recursion.
pub const MAX_ORDER_LOCAL: usize = 6;

/// Maximum total degree of the multivariate (per-edge) expansion.
pub const MAX_ORDER_MULTI: usize = 4;

/// Maximum number of distinct edge variables in the multivariate expansion.
pub const MAX_EDGES_MULTI: usize = 6;

/// Coefficient tables are exact rationals up to this order.
pub const MAX_BERNOULLI_ORDER: usize = 40;

/// Dense-matrix ceiling: total Hilbert space dimension.
pub const DIM_CAP: usize = 1 << 12;

/// Cluster enumeration ceiling.
pub const CLUSTER_CAP: usize = 100_000;

/// Relative scale with floor one. `fro` is the Frobenius norm of the matrix,
/// `dim` its linear dimension.
pub fn scale_from(fro: f64, dim: usize) -> f64 {
    (fro / dim.max(1) as f64).max(1.0)
}
