//! Exact and perturbative Schrieffer-Wolff machinery for finite-dimensional
//! quantum systems.
//!
//! The crate is organized around one pipeline:
//!
//! * [`operator`]: dense complex matrices, hermitian eigendecomposition,
//!   principal matrix functions of normal matrices.
//! * [`rotation`]: the direct rotation between a pair of subspace projectors
//!   and its anti-hermitian generator.
//! * [`exact`]: spectral splits of an unperturbed Hamiltonian, perturbed
//!   projectors, and the exact effective low-energy Hamiltonian.
//! * [`coefficients`]: exact rational Taylor tables behind the perturbative
//!   series.
//! * [`perturbative`]: the order-by-order generator and effective-Hamiltonian
//!   recursion (multivariate over edge couplings; single coupling as the
//!   one-variable case).
//! * [`diagrams`]: the rooted-tree expansion equivalent to the recursion.
//! * [`lattice`]: spin lattices, operator embedding, exact-support
//!   decomposition, cluster enumeration.
//! * [`local_sw`]: the locality-preserving transformation on lattices,
//!   garbage bounds, and the block-diagonal stability check.
//! * [`cluster`]: linked-cluster structure of the effective couplings and the
//!   equivalence rotation between the global and local expansions.

pub mod cluster;
pub mod coefficients;
pub mod diagrams;
pub mod error;
pub mod exact;
pub mod fit;
pub mod lattice;
pub mod local_sw;
pub mod operator;
pub mod perturbative;
pub mod random;
pub mod rotation;
pub mod series;
pub mod tol;

pub use error::{Result, SwError};
pub use operator::{CMat, Operator, Tag, C64};
