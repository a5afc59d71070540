//! Locality-preserving Schrieffer-Wolff transformation on a lattice.
//!
//! Instead of one global generator, the transformation `e^T` carries
//! `T = sum_j eps^j T_j` with every `T_j` a sum of strictly local pieces:
//!
//! ```text
//! T_j = sum_A L_A(V^(j-1)_A),    V^(0) = V,
//! ```
//!
//! where `V^(j)` is the order-(j+1) remainder of `e^T (H0 + eps V) e^{-T}`
//! once `T_1..T_j` are fixed, kept as an exact-support decomposition, and
//! `L_A` is the cross-block inverse of `ad_{H_{0,A}}` on the subset space.
//! Each elimination step satisfies
//!
//! ```text
//! [T_j, H0] + V^(j-1) = sum_A D_A(V^(j-1)_A)
//! ```
//!
//! so the conjugated Hamiltonian is block-diagonal order by order:
//!
//! ```text
//! H<n> = H0 + sum_{j=1}^n eps^j sum_A D_A(V^(j-1)_A),
//! ```
//!
//! with an order-(n+1) garbage remainder. `T_j` and `V^(j-1)` stay
//! (j+1)-local because every commutator of an a-local and a b-local term is
//! supported on their union and vanishes when they are disjoint.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Result, SwError};
use crate::lattice::{interaction_strength_class, LocalDecomposition, SpinLattice, Subset};
use crate::operator::{comm, exp_anti_hermitian, kron, operator_norm, scale_of, CMat};
use crate::tol;

/// Product eigendata of `H_{0,A}` on the subset space.
struct SubsetSpectral {
    /// Kronecker product of the member sites' eigenvector matrices.
    w: CMat,
    /// Product-state energies, sums of per-site eigenvalues.
    energies: Vec<f64>,
    /// True where every site digit is inside its ground multiplet.
    low: Vec<bool>,
}

fn subset_spectral(lattice: &SpinLattice, a: Subset) -> SubsetSpectral {
    let mut w = CMat::from_element(1, 1, C64::new(1.0, 0.0));
    let mut energies = vec![0.0f64];
    let mut low = vec![true];
    for u in a.sites() {
        let eig = lattice.site_eig(u);
        w = kron(&w, &eig.vectors);
        let mut e2 = Vec::with_capacity(energies.len() * eig.values.len());
        let mut l2 = Vec::with_capacity(e2.capacity());
        for (e, l) in energies.iter().zip(low.iter()) {
            for (k, v) in eig.values.iter().enumerate() {
                e2.push(e + v);
                l2.push(*l && k < lattice.site(u).low_dim);
            }
        }
        energies = e2;
        low = l2;
    }
    SubsetSpectral { w, energies, low }
}

/// Local cross-block inverse of `ad_{H_{0,A}}` for an operator on the subset
/// space of `a`:
///
/// ```text
/// L_A(X)_ij = (Q_A X P_A + P_A X Q_A)_ij / (E_i - E_j)
/// ```
///
/// in the product eigenbasis of `H_{0,A}`, satisfying
/// `[H_{0,A}, L_A(X)] = O_A(X)`. Site ground energies are zero and excited
/// energies at least the lattice gap, so cross denominators never fall below
/// the gap; anything under half of it means a corrupted lattice.
pub fn superop_l_a(lattice: &SpinLattice, a: Subset, x: &CMat) -> Result<CMat> {
    let d = lattice.subset_dim(a);
    if x.nrows() != d || x.ncols() != d {
        return Err(SwError::DimensionMismatch { expected: d, got: x.nrows() });
    }
    if a.is_empty() {
        // no excited block on the empty subset
        return Ok(CMat::zeros(d, d));
    }
    let sp = subset_spectral(lattice, a);
    let y = sp.w.adjoint() * x * &sp.w;
    let required = lattice.gap() / 2.0;
    let mut z = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if sp.low[i] != sp.low[j] {
                let denom = sp.energies[i] - sp.energies[j];
                if denom.abs() < required {
                    return Err(SwError::InternalGap { denom: denom.abs(), required });
                }
                z[(i, j)] = y[(i, j)] / C64::new(denom, 0.0);
            }
        }
    }
    Ok(&sp.w * z * sp.w.adjoint())
}

/// Restrict a full-space operator that is exactly supported on `a` to the
/// subset space; leakage beyond the subset is refused.
pub fn restrict_supported(lattice: &SpinLattice, a: Subset, x: &CMat) -> Result<CMat> {
    let d_comp = lattice.total_dim() / lattice.subset_dim(a);
    let restricted = lattice.ptrace_keep(a, x)?.scale(1.0 / d_comp as f64);
    let back = lattice.embed(a, &restricted)?;
    let residual = operator_norm(&(x - back));
    if residual > tol::TOL_STRUCT * scale_of(x) {
        return Err(SwError::SupportMismatch { subset: a.to_string(), residual });
    }
    Ok(restricted)
}

/// Block part of an operator on the subset space of `a`:
/// `D_A(X) = P_A X P_A + Q_A X Q_A`.
pub fn d_a_block(lattice: &SpinLattice, a: Subset, x: &CMat) -> CMat {
    let p = lattice.p_subset(a);
    let q = CMat::identity(p.nrows(), p.ncols()) - &p;
    &p * x * &p + &q * x * &q
}

/// Term-pairwise commutator of two decompositions: each `[X_A, Y_B]` with
/// intersecting supports is evaluated on the union space and re-decomposed,
/// so the result is again exact-support. Disjoint pairs commute and are
/// skipped, which is what keeps the locality growth additive.
pub fn commutator_local(
    lattice: &SpinLattice,
    x: &LocalDecomposition,
    y: &LocalDecomposition,
) -> Result<LocalDecomposition> {
    let mut out = LocalDecomposition::new();
    for (a, xa) in x.terms() {
        for (b, yb) in y.terms() {
            if a.intersection(b).is_empty() {
                continue;
            }
            let u = a.union(b);
            let xa_u = lattice.embed_within(a, u, xa)?;
            let yb_u = lattice.embed_within(b, u, yb)?;
            let c = comm(&xa_u, &yb_u);
            let dec = lattice.decompose_on_subset(u, &c)?;
            out.add_scaled(&dec, 1.0);
        }
    }
    out.prune(tol::TOL_SUPPORT * out.total_norm().max(1.0));
    Ok(out)
}

/// The built transformation: generators, remainders, and the block-diagonal
/// truncation at a fixed coupling.
pub struct LocalSw<'a> {
    lattice: &'a SpinLattice,
    epsilon: f64,
    order: usize,
    /// `T_1..T_n`; index `j - 1` holds `T_j`.
    t: Vec<LocalDecomposition>,
    /// `V^(0)..V^(n)`.
    vseq: Vec<LocalDecomposition>,
    /// `hn_coeffs[0] = H0`; `hn_coeffs[j] = sum_A D_A(V^(j-1)_A)` embedded.
    hn_coeffs: Vec<CMat>,
    /// `H<n>` at the stored coupling.
    hn: CMat,
    /// `P0 H<n> P0`.
    heff_loc: CMat,
}

impl<'a> LocalSw<'a> {
    pub fn lattice(&self) -> &SpinLattice {
        self.lattice
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn t(&self) -> &[LocalDecomposition] {
        &self.t
    }

    pub fn vseq(&self) -> &[LocalDecomposition] {
        &self.vseq
    }

    pub fn hn_coefficient(&self, j: usize) -> &CMat {
        &self.hn_coeffs[j]
    }

    pub fn hn(&self) -> &CMat {
        &self.hn
    }

    pub fn heff_loc(&self) -> &CMat {
        &self.heff_loc
    }

    /// `T = sum_j eps^j T_j` on the full space, anti-hermitian.
    pub fn t_full(&self) -> Result<CMat> {
        let dim = self.lattice.total_dim();
        let mut acc = CMat::zeros(dim, dim);
        let mut pow = self.epsilon;
        for tj in &self.t {
            acc += self.lattice.reconstruct(tj)?.scale(pow);
            pow *= self.epsilon;
        }
        Ok(acc)
    }
}

/// Nested adjoint tables: `rows[q][s]` holds the sum of
/// `ad_{T_{j1}} .. ad_{T_{jq}}(base)` over ordered index tuples with
/// `j1 + .. + jq + base_order = s`. Row `q` entries start at order
/// `base_order + q`; an entry is only stored once every generator it can
/// involve (index up to `s - base_order - q + 1`) is available, so stored
/// entries are final.
struct NestedTable {
    base_order: usize,
    rows: Vec<BTreeMap<usize, LocalDecomposition>>,
}

impl NestedTable {
    fn new(base: LocalDecomposition, base_order: usize) -> Self {
        let mut row0 = BTreeMap::new();
        row0.insert(base_order, base);
        NestedTable { base_order, rows: vec![row0] }
    }

    fn fill(
        &mut self,
        lattice: &SpinLattice,
        t: &[LocalDecomposition],
        max_order: usize,
    ) -> Result<()> {
        let available = t.len();
        for q in 1..=max_order {
            if self.rows.len() <= q {
                self.rows.push(BTreeMap::new());
            }
            let s_min = self.base_order + q;
            for s in s_min..=max_order {
                if self.rows[q].contains_key(&s) {
                    continue;
                }
                let j_max = s - self.base_order - (q - 1);
                if j_max > available {
                    continue;
                }
                let mut acc = LocalDecomposition::new();
                for j in 1..=j_max {
                    if let Some(inner) = self.rows[q - 1].get(&(s - j)) {
                        let c = commutator_local(lattice, &t[j - 1], inner)?;
                        acc.add_scaled(&c, 1.0);
                    }
                }
                acc.prune(tol::TOL_SUPPORT * acc.total_norm().max(1.0));
                self.rows[q].insert(s, acc);
            }
        }
        Ok(())
    }

    fn get(&self, q: usize, s: usize) -> Option<&LocalDecomposition> {
        self.rows.get(q).and_then(|r| r.get(&s))
    }
}

/// Build the transformation through order `n` at coupling `eps`.
///
/// Verifies the per-order elimination identity on the full space and returns
/// the state with all decompositions, the block-diagonal `H<n>`, and its low
/// block.
pub fn build_local_sw(lattice: &SpinLattice, epsilon: f64, n: usize) -> Result<LocalSw<'_>> {
    if n > tol::MAX_ORDER_LOCAL {
        return Err(SwError::OrderTooLarge { order: n, max: tol::MAX_ORDER_LOCAL });
    }
    let dim = lattice.total_dim();
    let h0_full = lattice.h0_full();
    let v_full = lattice.v_full();
    // H0 enters commutators through its natural per-site decomposition
    let mut h0_dec = LocalDecomposition::new();
    for u in 0..lattice.n_sites() {
        h0_dec.add_term(Subset::single(u), lattice.site(u).h0.clone());
    }
    let v_dec = lattice.support_decompose(&v_full)?;

    let mut t: Vec<LocalDecomposition> = Vec::with_capacity(n);
    let mut vseq: Vec<LocalDecomposition> = vec![v_dec.clone()];
    let mut nh = NestedTable::new(h0_dec, 0);
    let mut nv = NestedTable::new(v_dec, 1);
    let mut factorial: Vec<f64> = vec![1.0; n + 2];
    for q in 1..=n + 1 {
        factorial[q] = factorial[q - 1] * q as f64;
    }

    for m in 1..=n {
        // T_m from the latest remainder, term by term, re-decomposed
        let mut t_m = LocalDecomposition::new();
        for (a, va) in vseq[m - 1].terms() {
            let l = superop_l_a(lattice, a, va)?;
            let dec = lattice.decompose_on_subset(a, &l)?;
            t_m.add_scaled(&dec, 1.0);
        }
        t_m.prune(tol::TOL_SUPPORT * t_m.total_norm().max(1.0));
        t.push(t_m);

        // elimination identity at this order, on the full space
        let t_m_full = lattice.reconstruct(&t[m - 1])?;
        let v_prev_full = lattice.reconstruct(&vseq[m - 1])?;
        let mut d_sum = CMat::zeros(dim, dim);
        for (a, va) in vseq[m - 1].terms() {
            d_sum += lattice.embed(a, &d_a_block(lattice, a, va))?;
        }
        let identity_residual =
            operator_norm(&(comm(&t_m_full, &h0_full) + &v_prev_full - &d_sum));
        let tol_id = tol::TOL_ROT * scale_of(&v_prev_full).max(scale_of(&h0_full));
        if identity_residual > tol_id {
            return Err(SwError::Validation(format!(
                "local elimination identity failed at order {m}: residual {identity_residual:.3e} > {tol_id:.3e}"
            )));
        }

        // V^(m): every nested-adjoint contribution at total order m+1 that
        // does not involve the not-yet-chosen T_{m+1}
        nh.fill(lattice, &t, m + 1)?;
        nv.fill(lattice, &t, m + 1)?;
        let mut v_m = LocalDecomposition::new();
        for q in 2..=m + 1 {
            if let Some(d) = nh.get(q, m + 1) {
                v_m.add_scaled(d, 1.0 / factorial[q]);
            }
        }
        for q in 1..=m {
            if let Some(d) = nv.get(q, m + 1) {
                v_m.add_scaled(d, 1.0 / factorial[q]);
            }
        }
        v_m.prune(tol::TOL_SUPPORT * v_m.total_norm().max(1.0));
        vseq.push(v_m);
    }

    let mut hn_coeffs = vec![h0_full.clone()];
    for v_j in vseq.iter().take(n) {
        let mut coeff = CMat::zeros(dim, dim);
        for (a, va) in v_j.terms() {
            coeff += lattice.embed(a, &d_a_block(lattice, a, va))?;
        }
        hn_coeffs.push(coeff);
    }
    let mut hn = CMat::zeros(dim, dim);
    let mut pow = 1.0f64;
    for c in &hn_coeffs {
        hn += c.scale(pow);
        pow *= epsilon;
    }
    let p0 = lattice.p0();
    let heff_loc = p0 * &hn * p0;
    Ok(LocalSw { lattice, epsilon, order: n, t, vseq, hn_coeffs, hn, heff_loc })
}

/// Norm of everything the truncation drops:
/// `|| e^T (H0 + eps V) e^{-T} - H<n> ||` by dense conjugation.
pub fn garbage_norm(state: &LocalSw) -> Result<f64> {
    let t_full = state.t_full()?;
    let u = exp_anti_hermitian(&t_full)?;
    let h = state.lattice.hamiltonian(state.epsilon);
    let rotated = &u * h * u.adjoint();
    Ok(operator_norm(&(rotated - state.hn())))
}

/// Outcome of the block-diagonal stability condition.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    /// `sum_k 2^(k+2) J_k` over locality classes.
    pub lhs: f64,
    /// The lattice gap the sum is compared against.
    pub delta: f64,
    pub stable: bool,
    /// `(k, J_k)` for every populated class.
    pub per_class: Vec<(usize, f64)>,
}

/// Check the condition under which the ground state of a block-diagonal
/// perturbation `H0 + V` stays inside the unperturbed ground space:
/// `sum_k 2^(k+2) J_k < Delta` with `J_k` the strength of the k-site class.
/// Every term must commute with the ground projector of its subset.
pub fn stability_check(lattice: &SpinLattice, dec: &LocalDecomposition) -> Result<StabilityReport> {
    for (a, term) in dec.terms() {
        let p = lattice.p_subset(a);
        let residual = operator_norm(&comm(term, &p));
        let tol_bd = tol::TOL_ROT * operator_norm(term).max(1.0);
        if residual > tol_bd {
            return Err(SwError::NotBlockDiagonal {
                role: "interaction term",
                residual,
                tol: tol_bd,
            });
        }
    }
    let max_k = dec.k_locality();
    let mut per_class = Vec::new();
    let mut lhs = 0.0f64;
    for k in 1..=max_k {
        let j_k = interaction_strength_class(dec, k);
        if j_k > 0.0 {
            lhs += 2f64.powi(k as i32 + 2) * j_k;
            per_class.push((k, j_k));
        }
    }
    let delta = lattice.gap();
    Ok(StabilityReport { lhs, delta, stable: lhs < delta, per_class })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{EdgeSpec, SiteSpec};
    use crate::operator::{identity, spectral_decompose, validate_anti_hermitian};
    use crate::random;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn qubit_site(gap: f64) -> SiteSpec {
        let h0 = CMat::from_fn(2, 2, |i, j| if i == 1 && j == 1 { c(gap) } else { c(0.0) });
        SiteSpec { dim: 2, h0, low_dim: 1 }
    }

    fn sigma_x() -> CMat {
        CMat::from_fn(2, 2, |i, j| if i != j { c(1.0) } else { c(0.0) })
    }

    fn sigma_z() -> CMat {
        CMat::from_fn(2, 2, |i, j| if i == j { c(1.0 - 2.0 * i as f64) } else { c(0.0) })
    }

    fn xx_chain(n: usize, gap: f64) -> SpinLattice {
        let sites = (0..n).map(|_| qubit_site(gap)).collect();
        let xx = kron(&sigma_x(), &sigma_x());
        let edges = (0..n - 1).map(|u| EdgeSpec { u, v: u + 1, v_uv: xx.clone() }).collect();
        SpinLattice::new(sites, edges).unwrap()
    }

    #[test]
    fn local_l_single_site_closed_form() {
        let lat = xx_chain(2, 2.0);
        let a = Subset::single(0);
        let l = superop_l_a(&lat, a, &sigma_x()).unwrap();
        assert!((l[(0, 1)] - c(-0.5)).norm() < 1e-14);
        assert!((l[(1, 0)] - c(0.5)).norm() < 1e-14);
    }

    #[test]
    fn local_l_identity_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let lat = xx_chain(3, 2.0);
        let a = Subset::from_sites(&[0, 1]);
        let h0a = kron(&lat.site(0).h0, &identity(2)) + kron(&identity(2), &lat.site(1).h0);
        for _ in 0..10 {
            let x = random::random_hermitian(&mut rng, 4, 1.0);
            let l = superop_l_a(&lat, a, &x).unwrap();
            let p = lat.p_subset(a);
            let q = identity(4) - &p;
            let o = &p * &x * &q + &q * &x * &p;
            assert!((comm(&h0a, &l) - &o).norm() < 1e-10, "[H0_A, L_A(X)] != O_A(X)");
            // one-sided subset spectrum, so the gap bound is safe
            assert!(operator_norm(&l) <= operator_norm(&x) / lat.gap() + 1e-12);
            // block-diagonal input gives zero
            let d = &p * &x * &p + &q * &x * &q;
            assert!(superop_l_a(&lat, a, &d).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn block_diagonal_interaction_needs_no_rotation() {
        // sigma_z (x) sigma_z commutes with the product ground projector
        let sites = (0..3).map(|_| qubit_site(2.0)).collect::<Vec<_>>();
        let zz = kron(&sigma_z(), &sigma_z());
        let edges = (0..2).map(|u| EdgeSpec { u, v: u + 1, v_uv: zz.clone() }).collect();
        let lat = SpinLattice::new(sites, edges).unwrap();
        let sw = build_local_sw(&lat, 0.1, 3).unwrap();
        for tj in sw.t() {
            assert!(tj.is_empty() || tj.total_norm() < 1e-12, "T_j should vanish");
        }
        let expect = lat.hamiltonian(0.1);
        assert!((sw.hn() - &expect).norm() < 1e-10);
        assert!(garbage_norm(&sw).unwrap() < 1e-10);
    }

    #[test]
    fn first_remainder_matches_dense_formula() {
        // V^(1) = 1/2 [T_1, [T_1, H0]] + [T_1, V]
        let lat = xx_chain(2, 2.0);
        let sw = build_local_sw(&lat, 0.05, 2).unwrap();
        let t1 = lat.reconstruct(&sw.t()[0]).unwrap();
        let h0 = lat.h0_full();
        let v = lat.v_full();
        let expect = comm(&t1, &comm(&t1, &h0)).scale(0.5) + comm(&t1, &v);
        let got = lat.reconstruct(&sw.vseq()[1]).unwrap();
        assert!((got - expect).norm() < 1e-11);
    }

    #[test]
    fn generators_are_antihermitian_and_local() {
        let lat = xx_chain(4, 2.0);
        let sw = build_local_sw(&lat, 0.03, 3).unwrap();
        for (j, tj) in sw.t().iter().enumerate() {
            let full = lat.reconstruct(tj).unwrap();
            assert!(
                validate_anti_hermitian(&full, "T_j").is_ok(),
                "T_{} not anti-hermitian",
                j + 1
            );
            assert!(tj.k_locality() <= j + 2, "T_{} is {}-local", j + 1, tj.k_locality());
        }
        for (j, vj) in sw.vseq().iter().enumerate().take(3) {
            // V^(j) is (j+2)-local
            assert!(vj.k_locality() <= j + 2, "V^({j}) is {}-local", vj.k_locality());
        }
    }

    #[test]
    fn hn_is_globally_block_diagonal() {
        let lat = xx_chain(3, 2.0);
        let sw = build_local_sw(&lat, 0.04, 3).unwrap();
        let p0 = lat.p0();
        let q0 = identity(lat.total_dim()) - p0;
        let off = p0 * sw.hn() * &q0 + &q0 * sw.hn() * p0;
        assert!(off.norm() < 1e-9 * scale_of(sw.hn()), "H<n> has cross blocks");
    }

    #[test]
    fn garbage_vanishes_at_zero_coupling_and_scales_away() {
        let lat = xx_chain(3, 2.0);
        let sw0 = build_local_sw(&lat, 0.0, 2).unwrap();
        assert!(garbage_norm(&sw0).unwrap() < 1e-12);
        // order-3 scaling: halving eps divides the residual by about 8
        let g1 = garbage_norm(&build_local_sw(&lat, 0.02, 2).unwrap()).unwrap();
        let g2 = garbage_norm(&build_local_sw(&lat, 0.01, 2).unwrap()).unwrap();
        let ratio = g1 / g2;
        assert!(ratio > 6.0, "garbage ratio {ratio:.2} too small for order-3 scaling");
    }

    #[test]
    fn stability_examples() {
        let lat = xx_chain(3, 2.0);
        // V = 0
        let empty = LocalDecomposition::new();
        let rep = stability_check(&lat, &empty).unwrap();
        assert!(rep.stable && rep.lhs == 0.0);
        // one 2-local block-diagonal term with J = Delta/32: lhs = Delta/2
        let delta = lat.gap();
        let zz = kron(&sigma_z(), &sigma_z()).scale(delta / 32.0);
        let mut dec = LocalDecomposition::new();
        dec.add_term(Subset::from_sites(&[0, 1]), zz);
        let rep = stability_check(&lat, &dec).unwrap();
        assert!((rep.lhs - delta / 2.0).abs() < 1e-12);
        assert!(rep.stable);
        // non-block-diagonal term is refused
        let mut bad = LocalDecomposition::new();
        bad.add_term(Subset::from_sites(&[0, 1]), kron(&sigma_x(), &sigma_x()));
        assert!(matches!(
            stability_check(&lat, &bad),
            Err(SwError::NotBlockDiagonal { .. })
        ));
    }

    #[test]
    fn stable_interactions_keep_the_ground_state_in_p0() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for _ in 0..4 {
            let lat = xx_chain(3, 2.0);
            // random block-diagonal 2-local terms scaled under the condition
            let mut dec = LocalDecomposition::new();
            for u in 0..2 {
                let a = Subset::from_sites(&[u, u + 1]);
                let p = lat.p_subset(a);
                let q = identity(4) - &p;
                let x = random::random_hermitian(&mut rng, 4, 1.0);
                let bd = &p * &x * &p + &q * &x * &q;
                dec.add_term(a, bd.scale(rng.gen_range(0.005..0.01)));
            }
            let rep = stability_check(&lat, &dec).unwrap();
            assert!(rep.stable, "test construction should satisfy the condition");
            let h = lat.h0_full() + lat.reconstruct(&dec).unwrap();
            let eig = spectral_decompose(&h).unwrap();
            // ground energy of the compressed low block
            let split = lat.global_split().unwrap();
            let w = split.low_basis();
            let compressed = w.adjoint() * &h * &w;
            let eig_low = spectral_decompose(&compressed).unwrap();
            assert!(
                (eig.values[0] - eig_low.values[0]).abs() < 1e-10,
                "ground energy left the protected block"
            );
        }
    }

    #[test]
    fn restrict_supported_detects_leakage() {
        let lat = xx_chain(3, 2.0);
        let a = Subset::from_sites(&[0, 1]);
        let x = lat.embed(a, &kron(&sigma_x(), &sigma_z())).unwrap();
        let got = restrict_supported(&lat, a, &x).unwrap();
        assert!((got - kron(&sigma_x(), &sigma_z())).norm() < 1e-12);
        // an operator living on {1,2} does not restrict to {0,1}
        let y = lat.embed(Subset::from_sites(&[1, 2]), &kron(&sigma_x(), &sigma_x())).unwrap();
        assert!(matches!(
            restrict_supported(&lat, a, &y),
            Err(SwError::SupportMismatch { .. })
        ));
    }

    #[test]
    fn order_cap() {
        let lat = xx_chain(2, 2.0);
        assert!(matches!(
            build_local_sw(&lat, 0.1, tol::MAX_ORDER_LOCAL + 1),
            Err(SwError::OrderTooLarge { .. })
        ));
    }
}
