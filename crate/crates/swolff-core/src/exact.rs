//! Exact Schrieffer-Wolff transformation.
//!
//! An unperturbed hermitian `H0` is split by an energy window `I0` into a
//! low subspace (projector `P0`) and its complement, separated by a gap
//! `Delta`. For a perturbation `eps V` with `|eps| < eps_c = Delta/(2||V||)`
//! the spectrum of `H = H0 + eps V` still separates: the in-window
//! eigenvalues move by less than `Delta/2` while the excluded ones stay at
//! least `Delta/2` away from them. The spectral projector `P` of `H` on the
//! continued low spectrum satisfies `||P - P0|| <= 2 ||eps V|| / Delta < 1`,
//! so the direct rotation `U` from ran P to ran P0 exists and
//!
//! ```text
//! H_eff = P0 U H U^dag P0
//! ```
//! reproduces the low part of the exact spectrum on the unperturbed
//! subspace.

use crate::error::{Result, SwError};
use crate::operator::{
    self, identity, kron, operator_norm, validate_hermitian, CMat, EigenSystem,
};
use crate::rotation::{rotation_generator, RotationPair};
use crate::tol;

/// A hermitian operator together with a window-induced spectral split.
#[derive(Clone, Debug)]
pub struct SpectralSplit {
    h0: CMat,
    eig: EigenSystem,
    window: (f64, f64),
    /// Ascending eigenvalue indices inside the window (contiguous).
    low: Vec<usize>,
    p0: CMat,
    q0: CMat,
    /// Distance between in-window and out-of-window eigenvalues;
    /// infinite when the complement is empty.
    gap: f64,
    h0_norm: f64,
}

impl SpectralSplit {
    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn h0(&self) -> &CMat {
        &self.h0
    }

    pub fn eig(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn low_indices(&self) -> &[usize] {
        &self.low
    }

    pub fn rank(&self) -> usize {
        self.low.len()
    }

    pub fn p0(&self) -> &CMat {
        &self.p0
    }

    pub fn q0(&self) -> &CMat {
        &self.q0
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn h0_norm(&self) -> f64 {
        self.h0_norm
    }

    /// Orthonormal basis of the low subspace (dim x rank), the in-window
    /// eigenvectors of `H0` in ascending eigenvalue order.
    pub fn low_basis(&self) -> CMat {
        self.eig.basis(&self.low)
    }

    /// Compress a full-space operator to the low basis: `W^dag X W`.
    pub fn compress(&self, x: &CMat) -> CMat {
        let w = self.low_basis();
        w.adjoint() * x * w
    }

    /// In-window eigenvalues, ascending.
    pub fn low_values(&self) -> Vec<f64> {
        self.low.iter().map(|&k| self.eig.values[k]).collect()
    }
}

/// Split `h0` by the window `[lo, hi]`.
///
/// Refused when the window is empty of eigenvalues, when an eigenvalue sits
/// within the boundary tolerance of an endpoint (in/out classification would
/// be arbitrary), or when the gap falls below the relative floor.
pub fn make_split(h0: &CMat, window: (f64, f64)) -> Result<SpectralSplit> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(SwError::Validation(format!("window [{lo}, {hi}] is empty")));
    }
    validate_hermitian(h0, "H0")?;
    if h0.nrows() > tol::DIM_CAP {
        return Err(SwError::DimensionCap { dim: h0.nrows(), cap: tol::DIM_CAP });
    }
    let eig = operator::spectral_decompose(h0)?;
    let h0_norm = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let tol_win = tol::TOL_WINDOW_REL * h0_norm.max(1.0);
    for &v in &eig.values {
        for endpoint in [lo, hi] {
            if endpoint.is_finite() && (v - endpoint).abs() <= tol_win {
                return Err(SwError::AmbiguousBoundary { eigenvalue: v, endpoint, tol: tol_win });
            }
        }
    }
    let low: Vec<usize> =
        (0..eig.values.len()).filter(|&k| lo <= eig.values[k] && eig.values[k] <= hi).collect();
    if low.is_empty() {
        return Err(SwError::EmptyWindow { lo, hi });
    }
    let mut gap = f64::INFINITY;
    for &v in eig.values.iter() {
        if !(lo <= v && v <= hi) {
            for &l in &low {
                gap = gap.min((v - eig.values[l]).abs());
            }
        }
    }
    if gap.is_finite() {
        let floor = tol::GAP_FLOOR_REL * h0_norm;
        if gap <= floor {
            return Err(SwError::GapTooSmall { gap, floor });
        }
    }
    let p0 = eig.projector(&low);
    let q0 = identity(h0.nrows()) - &p0;
    Ok(SpectralSplit { h0: h0.clone(), eig, window, low, p0, q0, gap, h0_norm })
}

/// A split together with a hermitian perturbation and a coupling strength.
#[derive(Clone, Debug)]
pub struct PerturbedProblem {
    pub split: SpectralSplit,
    v: CMat,
    v_norm: f64,
    pub epsilon: f64,
}

impl PerturbedProblem {
    pub fn new(split: SpectralSplit, v: CMat, epsilon: f64) -> Result<Self> {
        validate_hermitian(&v, "V")?;
        if v.nrows() != split.dim() {
            return Err(SwError::DimensionMismatch { expected: split.dim(), got: v.nrows() });
        }
        let v_norm = operator_norm(&v);
        Ok(Self { split, v, v_norm, epsilon })
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn v_norm(&self) -> f64 {
        self.v_norm
    }

    /// Critical coupling `Delta / (2 ||V||)`; infinite when either the gap
    /// is infinite or the perturbation vanishes.
    pub fn epsilon_c(&self) -> f64 {
        if self.v_norm == 0.0 {
            f64::INFINITY
        } else {
            self.split.gap() / (2.0 * self.v_norm)
        }
    }

    /// `H = H0 + eps V`.
    pub fn hamiltonian(&self) -> CMat {
        self.split.h0() + self.v.scale(self.epsilon)
    }
}

/// Spectral split of the perturbed Hamiltonian across the window
/// `[E_min - Delta/2, E_max + Delta/2]` built around the in-window spectrum
/// of `H0` (not the user window, whose edges may sit closer than `Delta` to
/// excluded eigenvalues). Eigenvalues move by at most `||eps V|| < Delta/2`,
/// so this captures exactly the continuations of the in-window eigenvalues
/// while every excluded eigenvalue stays at least `Delta/2` outside. Its
/// projector is the perturbed `P`.
///
/// Requires `|eps| < eps_c`; the rank must come out equal to the rank of the
/// unperturbed split.
pub fn perturbed_projector(prob: &PerturbedProblem) -> Result<SpectralSplit> {
    let eps_c = prob.epsilon_c();
    if !(prob.epsilon.abs() < eps_c) {
        return Err(SwError::EpsilonTooLarge { epsilon: prob.epsilon.abs(), epsilon_c: eps_c });
    }
    let low_vals = prob.split.low_values();
    let (lo, hi) = (low_vals[0], low_vals[low_vals.len() - 1]);
    let margin = if prob.split.gap().is_finite() { prob.split.gap() / 2.0 } else { f64::INFINITY };
    let widened = (lo - margin, hi + margin);
    let split_p = make_split(&prob.hamiltonian(), widened)?;
    if split_p.rank() != prob.split.rank() {
        return Err(SwError::RankMismatch { expected: prob.split.rank(), got: split_p.rank() });
    }
    Ok(split_p)
}

/// The exact transformation and its effective Hamiltonian.
#[derive(Clone, Debug)]
pub struct ExactSw {
    /// Direct rotation taking ran P to ran P0.
    pub u: CMat,
    /// Anti-hermitian generator `log U`.
    pub s: CMat,
    /// Perturbed projector.
    pub p: CMat,
    /// `||P - P0||`.
    pub distance: f64,
    /// `P0 U H U^dag P0` on the full space.
    pub heff: CMat,
    /// The same operator compressed to the low eigenbasis of `H0` (rank x rank).
    pub heff_low: CMat,
    /// Split of the perturbed Hamiltonian (carries its spectrum).
    pub perturbed: SpectralSplit,
}

pub fn exact_sw_transform(prob: &PerturbedProblem) -> Result<ExactSw> {
    let perturbed = perturbed_projector(prob)?;
    let p = perturbed.p0().clone();
    let pair = RotationPair::new(p.clone(), prob.split.p0().clone())?;
    let distance = pair.distance();
    let s = rotation_generator(&pair)?;
    let u = operator::exp_anti_hermitian(&s)?;
    let rotated = &u * prob.hamiltonian() * u.adjoint();
    let heff = prob.split.p0() * &rotated * prob.split.p0();
    let heff_low = prob.split.compress(&rotated);
    Ok(ExactSw { u, s, p, distance, heff, heff_low, perturbed })
}

/// Additivity defect for a non-interacting bipartite problem.
///
/// Both factors must share the same coupling `eps`. The joint problem is
/// `H0 = H0_A (x) 1 + 1 (x) H0_B`, `V = V_A (x) 1 + 1 (x) V_B`, with the
/// window given by the sums of the factor windows. Returns
///
/// ```text
/// || H_eff^{AB} - H_eff^A (x) P0_B - P0_A (x) H_eff^B ||
/// ```
///
/// which vanishes because the direct rotation acts multiplicatively on the
/// product subspace, even though `U^{AB} != U^A (x) U^B`.
pub fn additivity_residual(prob_a: &PerturbedProblem, prob_b: &PerturbedProblem) -> Result<f64> {
    if prob_a.epsilon != prob_b.epsilon {
        return Err(SwError::EpsilonMismatch { a: prob_a.epsilon, b: prob_b.epsilon });
    }
    let (da, db) = (prob_a.split.dim(), prob_b.split.dim());
    let (ia, ib) = (identity(da), identity(db));
    let h0 = kron(prob_a.split.h0(), &ib) + kron(&ia, prob_b.split.h0());
    let v = kron(prob_a.v(), &ib) + kron(&ia, prob_b.v());
    let (lo_a, hi_a) = prob_a.split.window();
    let (lo_b, hi_b) = prob_b.split.window();
    let joint_split = make_split(&h0, (lo_a + lo_b, hi_a + hi_b))?;
    let p0_product = kron(prob_a.split.p0(), prob_b.split.p0());
    if operator_norm(&(joint_split.p0() - &p0_product)) > tol::TOL_ROT * (da * db) as f64 {
        return Err(SwError::Validation(
            "joint window does not select the product of the factor subspaces".into(),
        ));
    }
    let joint = PerturbedProblem::new(joint_split, v, prob_a.epsilon)?;
    let sw_joint = exact_sw_transform(&joint)?;
    let sw_a = exact_sw_transform(prob_a)?;
    let sw_b = exact_sw_transform(prob_b)?;
    let target = kron(&sw_a.heff, prob_b.split.p0()) + kron(prob_a.split.p0(), &sw_b.heff);
    Ok(operator_norm(&(&sw_joint.heff - target)))
}
