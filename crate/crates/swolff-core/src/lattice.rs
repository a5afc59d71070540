//! Spin lattices: sites with gapped local Hamiltonians, pairwise edge
//! interactions, operator embedding and partial traces, the exact-support
//! decomposition, interaction-strength norms, and connected-cluster
//! enumeration.
//!
//! Tensor ordering is site-major throughout: site 0 carries the slowest
//! index. Every embedding, partial trace, and Kronecker product in the crate
//! follows this one convention.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Result, SwError};
use crate::exact::{make_split, SpectralSplit};
use crate::operator::{self, kron, operator_norm, scale_of, validate_hermitian, CMat, EigenSystem};
use crate::tol;

/// Set of sites as a bitmask. Site `u` is bit `u`.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(n_sites: usize) -> Subset {
        Subset(((1u64 << n_sites) - 1) as u32)
    }

    pub fn from_sites(sites: &[usize]) -> Subset {
        Subset(sites.iter().fold(0u32, |m, &u| m | (1 << u)))
    }

    pub fn single(u: usize) -> Subset {
        Subset(1 << u)
    }

    pub fn contains(self, u: usize) -> bool {
        self.0 >> u & 1 == 1
    }

    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member sites in ascending order.
    pub fn sites(self) -> Vec<usize> {
        (0..32).filter(|&u| self.contains(u)).collect()
    }

    /// All subsets of `self`, including the empty set and `self`, ascending
    /// by mask value.
    pub fn subsets(self) -> Vec<Subset> {
        let mut out = Vec::with_capacity(1 << self.size());
        let mask = self.0;
        let mut sub = 0u32;
        loop {
            out.push(Subset(sub));
            if sub == mask {
                break;
            }
            sub = (sub.wrapping_sub(mask)) & mask;
        }
        out.sort();
        out
    }
}

impl std::fmt::Display for Subset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, u) in self.sites().into_iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{u}")?;
        }
        write!(f, "}}")
    }
}

/// One lattice site: local dimension, gapped local Hamiltonian, and the
/// degeneracy of its zero-energy ground space.
#[derive(Clone, Debug)]
pub struct SiteSpec {
    pub dim: usize,
    pub h0: CMat,
    pub low_dim: usize,
}

/// One interaction term on the ordered pair `u < v`, given on the two-site
/// space with site `u` slowest.
#[derive(Clone, Debug)]
pub struct EdgeSpec {
    pub u: usize,
    pub v: usize,
    pub v_uv: CMat,
}

/// Validated lattice with cached per-site spectral data.
#[derive(Clone, Debug)]
pub struct SpinLattice {
    sites: Vec<SiteSpec>,
    edges: Vec<EdgeSpec>,
    dims: Vec<usize>,
    total_dim: usize,
    /// Minimum over sites of the local gap.
    gap: f64,
    site_eig: Vec<EigenSystem>,
    site_ground: Vec<CMat>,
    p0: CMat,
    max_degree: usize,
}

impl SpinLattice {
    pub fn new(sites: Vec<SiteSpec>, edges: Vec<EdgeSpec>) -> Result<Self> {
        if sites.is_empty() {
            return Err(SwError::Validation("lattice needs at least one site".into()));
        }
        if sites.len() > 16 {
            return Err(SwError::Validation(format!(
                "{} sites exceed the bitmask-backed maximum of 16",
                sites.len()
            )));
        }
        let mut total_dim = 1usize;
        for s in &sites {
            if s.dim < 2 {
                return Err(SwError::Validation("site dimension must be at least 2".into()));
            }
            if s.low_dim == 0 || s.low_dim >= s.dim {
                return Err(SwError::Validation(format!(
                    "low_dim {} must satisfy 1 <= low_dim < dim = {}",
                    s.low_dim, s.dim
                )));
            }
            total_dim = total_dim.saturating_mul(s.dim);
        }
        if total_dim > tol::DIM_CAP {
            return Err(SwError::DimensionCap { dim: total_dim, cap: tol::DIM_CAP });
        }
        let mut site_eig = Vec::with_capacity(sites.len());
        let mut site_ground = Vec::with_capacity(sites.len());
        let mut gap = f64::INFINITY;
        for (u, s) in sites.iter().enumerate() {
            validate_hermitian(&s.h0, "site Hamiltonian")?;
            if s.h0.nrows() != s.dim {
                return Err(SwError::DimensionMismatch { expected: s.dim, got: s.h0.nrows() });
            }
            let eig = operator::spectral_decompose(&s.h0)?;
            let tol_site = tol::TOL_WINDOW_REL * eig.values.last().unwrap().abs().max(1.0);
            // ground energy exactly zero with multiplicity low_dim
            for k in 0..s.low_dim {
                if eig.values[k].abs() > tol_site {
                    return Err(SwError::Validation(format!(
                        "site {u}: eigenvalue {:.3e} at position {k} is not a zero ground energy",
                        eig.values[k]
                    )));
                }
            }
            let site_gap = eig.values[s.low_dim];
            if site_gap <= tol::GAP_FLOOR_REL * eig.values.last().unwrap().abs().max(1.0) {
                return Err(SwError::GapTooSmall {
                    gap: site_gap,
                    floor: tol::GAP_FLOOR_REL * eig.values.last().unwrap().abs().max(1.0),
                });
            }
            gap = gap.min(site_gap);
            let ground: Vec<usize> = (0..s.low_dim).collect();
            site_ground.push(eig.projector(&ground));
            site_eig.push(eig);
        }
        let mut degree = vec![0usize; sites.len()];
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.u >= e.v {
                return Err(SwError::Validation(format!(
                    "edge ({}, {}) must be given with u < v",
                    e.u, e.v
                )));
            }
            if e.v >= sites.len() {
                return Err(SwError::Validation(format!("edge site {} out of range", e.v)));
            }
            if !seen.insert((e.u, e.v)) {
                return Err(SwError::Validation(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
            let want = sites[e.u].dim * sites[e.v].dim;
            validate_hermitian(&e.v_uv, "edge interaction")?;
            if e.v_uv.nrows() != want {
                return Err(SwError::DimensionMismatch { expected: want, got: e.v_uv.nrows() });
            }
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let dims: Vec<usize> = sites.iter().map(|s| s.dim).collect();
        let mut p0 = site_ground[0].clone();
        for g in &site_ground[1..] {
            p0 = kron(&p0, g);
        }
        let max_degree = degree.into_iter().max().unwrap_or(0);
        Ok(SpinLattice {
            sites,
            edges,
            dims,
            total_dim,
            gap,
            site_eig,
            site_ground,
            p0,
            max_degree,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, u: usize) -> &SiteSpec {
        &self.sites[u]
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn full_subset(&self) -> Subset {
        Subset::full(self.n_sites())
    }

    pub fn site_eig(&self, u: usize) -> &EigenSystem {
        &self.site_eig[u]
    }

    /// Ground projector of site `u` on its own space.
    pub fn site_ground(&self, u: usize) -> &CMat {
        &self.site_ground[u]
    }

    /// Product of the per-site ground projectors (full space).
    pub fn p0(&self) -> &CMat {
        &self.p0
    }

    /// Ground projector of `H_{0,A}` on the subset space: the product of the
    /// member sites' ground projectors. `P_empty = 1` (a 1x1 identity).
    pub fn p_subset(&self, a: Subset) -> CMat {
        let mut p = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        for u in a.sites() {
            p = kron(&p, &self.site_ground[u]);
        }
        p
    }

    /// Isometry from the product ground space into the full space: columns
    /// are site-major products of per-site ground eigenvectors.
    pub fn low_isometry(&self) -> CMat {
        let mut w = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        for (u, s) in self.sites.iter().enumerate() {
            let cols = self.site_eig[u].vectors.columns(0, s.low_dim).into_owned();
            w = kron(&w, &cols);
        }
        w
    }

    /// Per-site ground multiplicities, site-major.
    pub fn low_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.low_dim).collect()
    }

    /// Dimension of the subset space.
    pub fn subset_dim(&self, a: Subset) -> usize {
        a.sites().iter().map(|&u| self.dims[u]).product()
    }

    /// `H0 = sum_u h0_u` embedded on the full space.
    pub fn h0_full(&self) -> CMat {
        let mut h = CMat::zeros(self.total_dim, self.total_dim);
        for u in 0..self.n_sites() {
            h += self.embed(Subset::single(u), &self.sites[u].h0).expect("site dims agree");
        }
        h
    }

    /// `V = sum_edges V_uv` embedded on the full space.
    pub fn v_full(&self) -> CMat {
        let mut v = CMat::zeros(self.total_dim, self.total_dim);
        for e in &self.edges {
            v += self
                .embed(Subset::from_sites(&[e.u, e.v]), &e.v_uv)
                .expect("edge dims validated");
        }
        v
    }

    /// `H0 + eps V` on the full space.
    pub fn hamiltonian(&self, eps: f64) -> CMat {
        self.h0_full() + self.v_full().scale(eps)
    }

    /// Global ground split: window `[-Delta/4, Delta/4]` around the zero
    /// ground energy of `H0`. Its projector equals [`SpinLattice::p0`].
    pub fn global_split(&self) -> Result<SpectralSplit> {
        make_split(&self.h0_full(), (-self.gap / 4.0, self.gap / 4.0))
    }

    /// Embed an operator on the subset `a` into the full space as
    /// `X (x) identity`, site-major. The empty subset embeds a 1x1 scalar.
    pub fn embed(&self, a: Subset, x: &CMat) -> Result<CMat> {
        let positions = a.sites();
        if positions.iter().any(|&u| u >= self.n_sites()) {
            return Err(SwError::Validation(format!("subset {a} exceeds the lattice")));
        }
        tensor_embed(&self.dims, &positions, x)
    }

    /// Embed an operator on `part` into the space of `whole` (relative
    /// version of [`SpinLattice::embed`]).
    pub fn embed_within(&self, part: Subset, whole: Subset, x: &CMat) -> Result<CMat> {
        if !part.is_subset_of(whole) {
            return Err(SwError::Validation(format!("{part} is not contained in {whole}")));
        }
        let whole_sites = whole.sites();
        let dims: Vec<usize> = whole_sites.iter().map(|&u| self.dims[u]).collect();
        let rel: Vec<usize> = part
            .sites()
            .iter()
            .map(|&u| whole_sites.iter().position(|&w| w == u).unwrap())
            .collect();
        tensor_embed(&dims, &rel, x)
    }

    /// Partial trace keeping the subset `a` (unnormalized): an operator on
    /// the subset space.
    pub fn ptrace_keep(&self, a: Subset, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.total_dim {
            return Err(SwError::DimensionMismatch { expected: self.total_dim, got: x.nrows() });
        }
        tensor_ptrace(&self.dims, &a.sites(), x)
    }

    /// Normalized conditional expectation `E_A(X)`: partial trace over the
    /// complement divided by its dimension, embedded back on the full space.
    pub fn conditional_expectation(&self, a: Subset, x: &CMat) -> Result<CMat> {
        let traced = self.ptrace_keep(a, x)?;
        let d_comp = self.total_dim / self.subset_dim(a);
        self.embed(a, &traced.scale(1.0 / d_comp as f64))
    }

    /// Exact-support decomposition `X = sum_A X_A` with
    /// `X_A = sum_{B subseteq A} (-1)^{|A| - |B|} E_B(X)`; each retained term
    /// is exactly supported on its subset. Terms with operator norm at or
    /// below `TOL_SUPPORT * scale(X)` are dropped.
    pub fn support_decompose(&self, x: &CMat) -> Result<LocalDecomposition> {
        if x.nrows() != self.total_dim {
            return Err(SwError::DimensionMismatch { expected: self.total_dim, got: x.nrows() });
        }
        decompose_dims(&self.dims, x, tol::TOL_SUPPORT * scale_of(x))
    }

    /// [`SpinLattice::support_decompose`] for an operator given on the
    /// subset space of `a`; returned subsets are global.
    pub fn decompose_on_subset(&self, a: Subset, x: &CMat) -> Result<LocalDecomposition> {
        let positions = a.sites();
        let sub_dims: Vec<usize> = positions.iter().map(|&u| self.dims[u]).collect();
        let want: usize = sub_dims.iter().product();
        if x.nrows() != want.max(1) {
            return Err(SwError::DimensionMismatch { expected: want.max(1), got: x.nrows() });
        }
        let local = decompose_dims(&sub_dims, x, tol::TOL_SUPPORT * scale_of(x))?;
        let mut terms = BTreeMap::new();
        for (local_mask, term) in local.terms {
            let mut global = 0u32;
            for (k, &u) in positions.iter().enumerate() {
                if local_mask >> k & 1 == 1 {
                    global |= 1 << u;
                }
            }
            terms.insert(global, term);
        }
        Ok(LocalDecomposition { terms })
    }

    /// Sum the decomposition back into a full-space operator.
    pub fn reconstruct(&self, dec: &LocalDecomposition) -> Result<CMat> {
        let mut acc = CMat::zeros(self.total_dim, self.total_dim);
        for (&mask, term) in &dec.terms {
            acc += self.embed(Subset(mask), term)?;
        }
        Ok(acc)
    }

    /// All connected edge subsets `C` with `1 <= |C| <= max_edges`, each with
    /// its site set, ordered by (edge count, lexicographic edge list).
    pub fn connected_clusters(&self, max_edges: usize) -> Result<Vec<Cluster>> {
        if self.edges.len() > 20 {
            return Err(SwError::Validation(format!(
                "{} edges exceed the enumeration bound of 20",
                self.edges.len()
            )));
        }
        let mut out = Vec::new();
        let n_e = self.edges.len();
        for mask in 1u32..(1u32 << n_e) {
            let count = mask.count_ones() as usize;
            if count > max_edges {
                continue;
            }
            let edges: Vec<usize> = (0..n_e).filter(|&k| mask >> k & 1 == 1).collect();
            if !self.edges_connected(&edges) {
                continue;
            }
            let mut sites = Subset::EMPTY;
            for &k in &edges {
                sites = sites.union(Subset::from_sites(&[self.edges[k].u, self.edges[k].v]));
            }
            out.push(Cluster { edges, sites });
            if out.len() > tol::CLUSTER_CAP {
                return Err(SwError::TooManyClusters { count: out.len(), cap: tol::CLUSTER_CAP });
            }
        }
        out.sort_by(|a, b| (a.edges.len(), &a.edges).cmp(&(b.edges.len(), &b.edges)));
        Ok(out)
    }

    /// Union-find connectivity of the subgraph induced by the listed edges.
    /// The edge list must be nonempty.
    pub fn edges_connected(&self, edges: &[usize]) -> bool {
        let mut parent: Vec<usize> = (0..self.n_sites()).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &k in edges {
            let (a, b) = (self.edges[k].u, self.edges[k].v);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let mut touched = Subset::EMPTY;
        for &k in edges {
            touched = touched.union(Subset::from_sites(&[self.edges[k].u, self.edges[k].v]));
        }
        let sites = touched.sites();
        let root = find(&mut parent, sites[0]);
        sites.into_iter().all(|u| find(&mut parent, u) == root)
    }
}

/// A connected edge subset and the sites it touches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    /// Edge indices into the lattice's edge list, ascending.
    pub edges: Vec<usize>,
    /// `Lambda(C)`: all endpoint sites.
    pub sites: Subset,
}

/// Operator split into exactly-supported terms, keyed by site subset.
/// Each term is stored on its own subset space.
#[derive(Clone, Debug, Default)]
pub struct LocalDecomposition {
    terms: BTreeMap<u32, CMat>,
}

impl LocalDecomposition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Subset, &CMat)> {
        self.terms.iter().map(|(&m, t)| (Subset(m), t))
    }

    pub fn get(&self, a: Subset) -> Option<&CMat> {
        self.terms.get(&a.0)
    }

    pub fn subsets(&self) -> Vec<Subset> {
        self.terms.keys().map(|&m| Subset(m)).collect()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest subset size carrying a term.
    pub fn k_locality(&self) -> usize {
        self.terms.keys().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }

    /// Add (accumulate) a term on a subset.
    pub fn add_term(&mut self, a: Subset, term: CMat) {
        match self.terms.get_mut(&a.0) {
            Some(t) => *t += term,
            None => {
                self.terms.insert(a.0, term);
            }
        }
    }

    /// Merge another decomposition into this one, scaling its terms.
    pub fn add_scaled(&mut self, other: &LocalDecomposition, factor: f64) {
        for (&mask, term) in &other.terms {
            self.add_term(Subset(mask), term.scale(factor));
        }
    }

    /// Drop terms with norm at or below the threshold.
    pub fn prune(&mut self, threshold: f64) {
        self.terms.retain(|_, t| operator_norm(t) > threshold);
    }

    /// Sum of term operator norms; coarse but deterministic diagnostic.
    pub fn total_norm(&self) -> f64 {
        self.terms.values().map(operator_norm).sum()
    }
}

/// Interaction strength `J = max_u sum_{A owning u} ||X_A||`. The empty
/// subset carries no site and never contributes.
pub fn interaction_strength(dec: &LocalDecomposition) -> f64 {
    let mut per_site: BTreeMap<usize, f64> = BTreeMap::new();
    for (a, term) in dec.terms() {
        let n = operator_norm(term);
        for u in a.sites() {
            *per_site.entry(u).or_insert(0.0) += n;
        }
    }
    per_site.values().fold(0.0f64, |acc, &v| acc.max(v))
}

/// Interaction strength restricted to terms on exactly `k` sites.
pub fn interaction_strength_class(dec: &LocalDecomposition, k: usize) -> f64 {
    let mut per_site: BTreeMap<usize, f64> = BTreeMap::new();
    for (a, term) in dec.terms() {
        if a.size() != k {
            continue;
        }
        let n = operator_norm(term);
        for u in a.sites() {
            *per_site.entry(u).or_insert(0.0) += n;
        }
    }
    per_site.values().fold(0.0f64, |acc, &v| acc.max(v))
}

/// Positions-to-global index offsets: `pa[i]` is the global index
/// contribution of subset state `i` (site-major within the subset).
fn index_offsets(dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let mut strides = vec![0usize; dims.len()];
    let mut acc = 1usize;
    for u in (0..dims.len()).rev() {
        strides[u] = acc;
        acc *= dims[u];
    }
    let d: usize = positions.iter().map(|&u| dims[u]).product::<usize>().max(1);
    let mut out = vec![0usize; d];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut rem = i;
        let mut sub_stride: usize = positions.iter().map(|&u| dims[u]).product();
        for &u in positions {
            sub_stride /= dims[u];
            let digit = rem / sub_stride;
            rem %= sub_stride;
            *slot += digit * strides[u];
        }
    }
    out
}

/// Embed `x` (acting on `positions`, ascending, slowest-first) into the full
/// product space of `dims`.
pub fn tensor_embed(dims: &[usize], positions: &[usize], x: &CMat) -> Result<CMat> {
    let d_a: usize = positions.iter().map(|&u| dims[u]).product::<usize>().max(1);
    if x.nrows() != d_a || x.ncols() != d_a {
        return Err(SwError::DimensionMismatch { expected: d_a, got: x.nrows() });
    }
    let comp: Vec<usize> = (0..dims.len()).filter(|u| !positions.contains(u)).collect();
    let pa = index_offsets(dims, positions);
    let pc = index_offsets(dims, &comp);
    let total: usize = dims.iter().product();
    let mut out = CMat::zeros(total, total);
    for (ia, &ga) in pa.iter().enumerate() {
        for (ja, &gja) in pa.iter().enumerate() {
            let val = x[(ia, ja)];
            if val == C64::new(0.0, 0.0) {
                continue;
            }
            for &gc in &pc {
                out[(ga + gc, gja + gc)] = val;
            }
        }
    }
    Ok(out)
}

/// Partial trace of a full-space operator keeping `positions`.
pub fn tensor_ptrace(dims: &[usize], positions: &[usize], x: &CMat) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if x.nrows() != total || x.ncols() != total {
        return Err(SwError::DimensionMismatch { expected: total, got: x.nrows() });
    }
    let comp: Vec<usize> = (0..dims.len()).filter(|u| !positions.contains(u)).collect();
    let pa = index_offsets(dims, positions);
    let pc = index_offsets(dims, &comp);
    let d_a = pa.len();
    let mut out = CMat::zeros(d_a, d_a);
    for (ia, &ga) in pa.iter().enumerate() {
        for (ja, &gja) in pa.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &gc in &pc {
                acc += x[(ga + gc, gja + gc)];
            }
            out[(ia, ja)] = acc;
        }
    }
    Ok(out)
}

/// Core of the support decomposition over an explicit dims vector; masks are
/// positions into `dims`. Terms with norm at or below `threshold` are
/// dropped.
pub fn decompose_dims(dims: &[usize], x: &CMat, threshold: f64) -> Result<LocalDecomposition> {
    let n = dims.len();
    // normalized partial traces for every subset
    let mut traced: Vec<CMat> = Vec::with_capacity(1 << n);
    for mask in 0u32..(1u32 << n) {
        let positions: Vec<usize> = (0..n).filter(|&u| mask >> u & 1 == 1).collect();
        let d_comp: usize = (0..n).filter(|u| !positions.contains(u)).map(|u| dims[u]).product();
        let t = tensor_ptrace(dims, &positions, x)?;
        traced.push(t.scale(1.0 / d_comp as f64));
    }
    let mut dec = LocalDecomposition::new();
    for mask in 0u32..(1u32 << n) {
        let positions: Vec<usize> = (0..n).filter(|&u| mask >> u & 1 == 1).collect();
        let d_a = traced[mask as usize].nrows();
        let mut term = CMat::zeros(d_a, d_a);
        let size_a = mask.count_ones();
        // Moebius sum over subsets of the mask
        let mut sub = 0u32;
        loop {
            let sign = if (size_a - sub.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            let b_positions: Vec<usize> = (0..n).filter(|&u| sub >> u & 1 == 1).collect();
            let rel: Vec<usize> = b_positions
                .iter()
                .map(|&u| positions.iter().position(|&p| p == u).unwrap())
                .collect();
            let sub_dims: Vec<usize> = positions.iter().map(|&u| dims[u]).collect();
            term += tensor_embed(&sub_dims, &rel, &traced[sub as usize])?.scale(sign);
            if sub == mask {
                break;
            }
            sub = (sub.wrapping_sub(mask)) & mask;
        }
        if operator_norm(&term) > threshold {
            dec.add_term(Subset(mask), term);
        }
    }
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::identity;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn qubit_site(gap: f64) -> SiteSpec {
        let h0 = CMat::from_fn(2, 2, |i, j| if i == 1 && j == 1 { c(gap) } else { c(0.0) });
        SiteSpec { dim: 2, h0, low_dim: 1 }
    }

    fn sigma_z() -> CMat {
        CMat::from_fn(2, 2, |i, j| if i == j { c(1.0 - 2.0 * i as f64) } else { c(0.0) })
    }

    fn sigma_x() -> CMat {
        CMat::from_fn(2, 2, |i, j| if i != j { c(1.0) } else { c(0.0) })
    }

    fn chain(n: usize, gap: f64, edge_op: &CMat) -> SpinLattice {
        let sites = (0..n).map(|_| qubit_site(gap)).collect();
        let edges = (0..n - 1)
            .map(|u| EdgeSpec { u, v: u + 1, v_uv: edge_op.clone() })
            .collect();
        SpinLattice::new(sites, edges).unwrap()
    }

    #[test]
    fn subset_basics() {
        let a = Subset::from_sites(&[0, 2]);
        assert_eq!(a.size(), 2);
        assert!(a.contains(0) && !a.contains(1));
        assert_eq!(a.sites(), vec![0, 2]);
        assert_eq!(a.to_string(), "{0,2}");
        assert_eq!(a.subsets().len(), 4);
        assert!(Subset::single(2).is_subset_of(a));
    }

    #[test]
    fn embed_follows_site_major_order() {
        let lat = chain(2, 2.0, &kron(&sigma_x(), &sigma_x()));
        // sigma_z at site 1: I (x) sigma_z = diag(1,-1,1,-1)
        let e = lat.embed(Subset::single(1), &sigma_z()).unwrap();
        let want = [1.0, -1.0, 1.0, -1.0];
        for i in 0..4 {
            assert_eq!(e[(i, i)], c(want[i]));
        }
        // sigma_z at site 0: diag(1,1,-1,-1)
        let e0 = lat.embed(Subset::single(0), &sigma_z()).unwrap();
        let want0 = [1.0, 1.0, -1.0, -1.0];
        for i in 0..4 {
            assert_eq!(e0[(i, i)], c(want0[i]));
        }
        // empty subset: scalar to c I
        let s = CMat::from_element(1, 1, c(2.5));
        assert!((lat.embed(Subset::EMPTY, &s).unwrap() - identity(4).scale(2.5)).norm() < 1e-15);
    }

    #[test]
    fn embed_ptrace_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let lat = chain(3, 2.0, &kron(&sigma_x(), &sigma_x()));
        let a = Subset::from_sites(&[0, 2]);
        let x = random::random_hermitian(&mut rng, 4, 1.0);
        let embedded = lat.embed(a, &x).unwrap();
        let back = lat.ptrace_keep(a, &embedded).unwrap();
        // complement is one qubit: factor 2
        assert!((back - x.scale(2.0)).norm() < 1e-12);
    }

    #[test]
    fn conditional_expectations_commute_and_project() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let lat = chain(3, 2.0, &kron(&sigma_x(), &sigma_x()));
        let x = random::random_hermitian(&mut rng, 8, 1.0);
        let a = Subset::from_sites(&[0, 1]);
        let b = Subset::from_sites(&[1, 2]);
        let ea_eb = lat
            .conditional_expectation(a, &lat.conditional_expectation(b, &x).unwrap())
            .unwrap();
        let e_ab = lat.conditional_expectation(a.intersection(b), &x).unwrap();
        assert!((&ea_eb - &e_ab).norm() < 1e-12, "E_A E_B != E_(A cap B)");
        // E_A is idempotent
        let ea = lat.conditional_expectation(a, &x).unwrap();
        assert!((lat.conditional_expectation(a, &ea).unwrap() - &ea).norm() < 1e-12);
    }

    #[test]
    fn support_decompose_identity_and_single_site_terms() {
        let lat = chain(2, 2.0, &kron(&sigma_x(), &sigma_x()));
        let dec = lat.support_decompose(&identity(4).scale(3.0)).unwrap();
        assert_eq!(dec.subsets(), vec![Subset::EMPTY]);
        let x = lat.embed(Subset::single(0), &sigma_z()).unwrap()
            + lat.embed(Subset::single(1), &sigma_x()).unwrap();
        let dec = lat.support_decompose(&x).unwrap();
        assert_eq!(dec.subsets(), vec![Subset::single(0), Subset::single(1)]);
        assert!((dec.get(Subset::single(0)).unwrap() - sigma_z()).norm() < 1e-12);
        assert!((dec.get(Subset::single(1)).unwrap() - sigma_x()).norm() < 1e-12);
    }

    #[test]
    fn support_decompose_reconstructs_and_respects_locality() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let sites = (0..4).map(|_| qubit_site(2.0)).collect::<Vec<_>>();
        let edges = vec![
            EdgeSpec { u: 0, v: 1, v_uv: random::random_hermitian(&mut rng, 4, 1.0) },
            EdgeSpec { u: 1, v: 2, v_uv: random::random_hermitian(&mut rng, 4, 1.0) },
            EdgeSpec { u: 2, v: 3, v_uv: random::random_hermitian(&mut rng, 4, 1.0) },
            EdgeSpec { u: 0, v: 3, v_uv: random::random_hermitian(&mut rng, 4, 1.0) },
        ];
        let lat = SpinLattice::new(sites, edges).unwrap();
        let v = lat.v_full();
        let dec = lat.support_decompose(&v).unwrap();
        assert!(dec.k_locality() <= 2, "2-local input decomposed above 2 sites");
        let back = lat.reconstruct(&dec).unwrap();
        assert!((back - &v).norm() < 1e-10 * scale_of(&v));
    }

    #[test]
    fn decompose_then_embed_is_identity_on_supported_operators() {
        let lat = chain(3, 2.0, &kron(&sigma_x(), &sigma_x()));
        let a = Subset::from_sites(&[1, 2]);
        // traceless on both factors: exactly supported on {1,2}
        let t = kron(&sigma_x(), &sigma_z());
        let x = lat.embed(a, &t).unwrap();
        let dec = lat.support_decompose(&x).unwrap();
        assert_eq!(dec.subsets(), vec![a]);
        assert!((dec.get(a).unwrap() - &t).norm() < 1e-12);
    }

    #[test]
    fn decompose_on_subset_maps_masks_globally() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let lat = chain(4, 2.0, &kron(&sigma_x(), &sigma_x()));
        let a = Subset::from_sites(&[1, 3]);
        let x = random::random_hermitian(&mut rng, 4, 1.0);
        let dec = lat.decompose_on_subset(a, &x).unwrap();
        for s in dec.subsets() {
            assert!(s.is_subset_of(a), "term {s} escaped the subset");
        }
        // reconstruct on the subset space through global embedding
        let full = lat.embed(a, &x).unwrap();
        let back = lat.reconstruct(&dec).unwrap();
        assert!((back - full).norm() < 1e-10);
    }

    #[test]
    fn interaction_strength_examples() {
        let lat = chain(3, 2.0, &kron(&sigma_x(), &sigma_x()));
        let dec = lat.support_decompose(&lat.v_full()).unwrap();
        // both edges have norm 1; the middle site sees both
        assert!((interaction_strength(&dec) - 2.0).abs() < 1e-12);
        assert!((interaction_strength_class(&dec, 2) - 2.0).abs() < 1e-12);
        assert_eq!(interaction_strength_class(&dec, 1), 0.0);
        // single edge
        let lat1 = chain(2, 2.0, &kron(&sigma_x(), &sigma_x()));
        let dec1 = lat1.support_decompose(&lat1.v_full()).unwrap();
        assert!((interaction_strength(&dec1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_bounded_by_sites_times_strength() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        // traceless 2-local terms so the empty component vanishes
        let mut term = random::random_hermitian(&mut rng, 4, 1.0);
        let tr = term.trace() / c(4.0);
        term -= identity(4).scale(1.0) * tr;
        let lat = chain(4, 2.0, &term);
        let v = lat.v_full();
        let dec = lat.support_decompose(&v).unwrap();
        let j = interaction_strength(&dec);
        assert!(
            operator_norm(&v) <= lat.n_sites() as f64 * j + 1e-12,
            "||V|| > N J"
        );
    }

    #[test]
    fn ground_projectors_multiply() {
        let lat = chain(3, 2.0, &kron(&sigma_x(), &sigma_x()));
        assert_eq!(lat.p_subset(Subset::EMPTY).nrows(), 1);
        let full = lat.p_subset(lat.full_subset());
        assert!((&full - lat.p0()).norm() < 1e-14);
        let split = lat.global_split().unwrap();
        assert!((split.p0() - lat.p0()).norm() < 1e-10);
        assert!((lat.gap() - 2.0).abs() < 1e-12);
        assert!((split.gap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cluster_enumeration() {
        // path of 3 edges: 3 singletons + 2 adjacent pairs
        let lat = chain(4, 2.0, &kron(&sigma_x(), &sigma_x()));
        let cl = lat.connected_clusters(2).unwrap();
        assert_eq!(cl.len(), 5);
        assert_eq!(cl[0].edges, vec![0]);
        assert_eq!(cl[3].edges, vec![0, 1]);
        assert_eq!(cl[3].sites, Subset::from_sites(&[0, 1, 2]));
        // two disjoint edges: no 2-edge cluster
        let sites = (0..4).map(|_| qubit_site(2.0)).collect::<Vec<_>>();
        let edges = vec![
            EdgeSpec { u: 0, v: 1, v_uv: kron(&sigma_x(), &sigma_x()) },
            EdgeSpec { u: 2, v: 3, v_uv: kron(&sigma_x(), &sigma_x()) },
        ];
        let lat2 = SpinLattice::new(sites, edges).unwrap();
        let cl2 = lat2.connected_clusters(2).unwrap();
        assert_eq!(cl2.len(), 2);
        assert!(cl2.iter().all(|c| c.edges.len() == 1));
    }

    #[test]
    fn lattice_validation_errors() {
        // nonzero ground energy
        let bad = SiteSpec {
            dim: 2,
            h0: CMat::from_fn(2, 2, |i, j| if i == j { c(1.0 + i as f64) } else { c(0.0) }),
            low_dim: 1,
        };
        assert!(SpinLattice::new(vec![bad], vec![]).is_err());
        // wrong multiplicity: claims 2-fold ground on a nondegenerate h0
        let bad2 = SiteSpec {
            dim: 3,
            h0: CMat::from_fn(3, 3, |i, j| if i == j { c(i as f64) } else { c(0.0) }),
            low_dim: 2,
        };
        assert!(SpinLattice::new(vec![bad2], vec![]).is_err());
        // edge with u >= v
        let e = EdgeSpec { u: 1, v: 0, v_uv: kron(&sigma_x(), &sigma_x()) };
        assert!(SpinLattice::new(vec![qubit_site(2.0), qubit_site(2.0)], vec![e]).is_err());
        // edge dimension mismatch
        let e2 = EdgeSpec { u: 0, v: 1, v_uv: sigma_x() };
        assert!(SpinLattice::new(vec![qubit_site(2.0), qubit_site(2.0)], vec![e2]).is_err());
    }

    #[test]
    fn mixed_dimensions_and_gap() {
        // one qubit (gap 2) and one qutrit (gap 1.5): Delta = 1.5
        let qutrit = SiteSpec {
            dim: 3,
            h0: CMat::from_fn(3, 3, |i, j| {
                if i == j {
                    c([0.0, 1.5, 3.0][i])
                } else {
                    c(0.0)
                }
            }),
            low_dim: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let v = random::random_hermitian(&mut rng, 6, 0.5);
        let lat = SpinLattice::new(
            vec![qubit_site(2.0), qutrit],
            vec![EdgeSpec { u: 0, v: 1, v_uv: v }],
        )
        .unwrap();
        assert_eq!(lat.total_dim(), 6);
        assert!((lat.gap() - 1.5).abs() < 1e-12);
        let split = lat.global_split().unwrap();
        assert_eq!(split.rank(), 1);
    }
}
