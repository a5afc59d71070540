//! Rooted-tree expansion of the perturbative series.
//!
//! Every coefficient of the generator and effective-Hamiltonian recursion
//! unfolds into a sum over rooted ordered trees. A node with `k` children
//! evaluates bottom-up:
//!
//! ```text
//! k = 0 (leaf)      S_1 = L(V_od)
//! k = 1             -L([V_d, O_child])
//! k even            L([O_1, [O_2, ... [O_k, V_od] ...]])
//! root, k odd       P0 [O_1, [O_2, ... [O_k, V_od] ...]] P0   (H variant)
//! ```
//!
//! and carries the weight `a_k` (even `k`, with `a_0 = 1`), `1` (`k = 1`), or
//! `b_k` (odd root of the H variant). A tree for the generator has every node
//! with `k` in `{1} union evens`; a tree for the effective Hamiltonian has an
//! odd-degree root and generator-admissible nodes below it. The order of a
//! tree is its node count, and the weighted sum over all trees of order `n`
//! reproduces the recursion's coefficient exactly, term by term.
//!
//! The expansion is kept as an independent cross-check: it shares no code
//! with the recursion beyond `L` itself.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::coefficients::{bernoulli_coefficients, RationalCoefficientTable};
use crate::error::{Result, SwError};
use crate::exact::SpectralSplit;
use crate::operator::{block_split, comm, validate_hermitian, CMat};
use crate::perturbative::superop_l;
use crate::tol;

/// Rooted ordered tree, stored as child subtrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramTree {
    children: Vec<DiagramTree>,
}

impl DiagramTree {
    pub fn leaf() -> Self {
        DiagramTree { children: vec![] }
    }

    pub fn node(children: Vec<DiagramTree>) -> Self {
        DiagramTree { children }
    }

    pub fn children(&self) -> &[DiagramTree] {
        &self.children
    }

    pub fn arity(&self) -> usize {
        self.children.len()
    }

    /// Number of nodes; this is the expansion order the tree contributes to.
    pub fn order(&self) -> usize {
        1 + self.children.iter().map(DiagramTree::order).sum::<usize>()
    }

    /// Preorder child-count sequence; a complete, unique encoding.
    pub fn encoding(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.order());
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.children.len() as u8);
        for c in &self.children {
            c.encode_into(out);
        }
    }

    /// Parse a preorder child-count encoding; refused unless it is exactly
    /// one complete tree.
    pub fn from_encoding(code: &[u8]) -> Result<DiagramTree> {
        let mut pos = 0usize;
        let tree = Self::parse(code, &mut pos)?;
        if pos != code.len() {
            return Err(SwError::NotAdmissible(format!(
                "encoding has {} trailing entries",
                code.len() - pos
            )));
        }
        Ok(tree)
    }

    fn parse(code: &[u8], pos: &mut usize) -> Result<DiagramTree> {
        let Some(&k) = code.get(*pos) else {
            return Err(SwError::NotAdmissible("encoding ends mid-tree".into()));
        };
        *pos += 1;
        let mut children = Vec::with_capacity(k as usize);
        for _ in 0..k {
            children.push(Self::parse(code, pos)?);
        }
        Ok(DiagramTree { children })
    }

    fn arity_fits_generator(k: usize) -> bool {
        k == 1 || k % 2 == 0
    }

    /// Every node has child count in `{1} union evens` (generator variant).
    pub fn is_generator_admissible(&self) -> bool {
        Self::arity_fits_generator(self.arity())
            && self.children.iter().all(DiagramTree::is_generator_admissible)
    }

    /// Odd root child count, generator-admissible below (H variant).
    pub fn is_heff_admissible(&self) -> bool {
        self.arity() % 2 == 1 && self.children.iter().all(DiagramTree::is_generator_admissible)
    }
}

/// Ordered compositions of `total` into exactly `parts` positive parts.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    // first part takes at least 1, leaving at least parts-1 behind
    for first in 1..=total.saturating_sub(parts - 1) {
        for rest in compositions(total - first, parts - 1) {
            let mut c = Vec::with_capacity(parts);
            c.push(first);
            c.extend(rest);
            out.push(c);
        }
    }
    out
}

fn cartesian(choices: &[&[DiagramTree]]) -> Vec<Vec<DiagramTree>> {
    let mut out: Vec<Vec<DiagramTree>> = vec![vec![]];
    for cs in choices {
        let mut next = Vec::with_capacity(out.len() * cs.len());
        for prefix in &out {
            for c in *cs {
                let mut row = prefix.clone();
                row.push(c.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// Generator-admissible trees by node count, `cache[n]` for `n <= max`.
fn generator_cache(max: usize) -> Vec<Vec<DiagramTree>> {
    let mut cache: Vec<Vec<DiagramTree>> = vec![vec![]; max + 1];
    if max == 0 {
        return cache;
    }
    cache[1] = vec![DiagramTree::leaf()];
    for n in 2..=max {
        let mut trees = Vec::new();
        for k in (1..n).filter(|&k| DiagramTree::arity_fits_generator(k)) {
            for comp in compositions(n - 1, k) {
                let slices: Vec<&[DiagramTree]> = comp.iter().map(|&m| cache[m].as_slice()).collect();
                for children in cartesian(&slices) {
                    trees.push(DiagramTree::node(children));
                }
            }
        }
        trees.sort_by_key(DiagramTree::encoding);
        cache[n] = trees;
    }
    cache
}

/// All generator-variant trees of order `n`, sorted by encoding.
pub fn enumerate_generator_trees(n: usize) -> Result<Vec<DiagramTree>> {
    if n == 0 || n > tol::MAX_ORDER_GLOBAL {
        return Err(SwError::OrderTooLarge { order: n, max: tol::MAX_ORDER_GLOBAL });
    }
    Ok(generator_cache(n).swap_remove(n))
}

/// All H-variant trees of order `n >= 2`, sorted by encoding.
pub fn enumerate_heff_trees(n: usize) -> Result<Vec<DiagramTree>> {
    if n < 2 || n > tol::MAX_ORDER_GLOBAL {
        return Err(SwError::OrderTooLarge { order: n, max: tol::MAX_ORDER_GLOBAL });
    }
    let cache = generator_cache(n - 1);
    let mut trees = Vec::new();
    for k in (1..n).step_by(2) {
        for comp in compositions(n - 1, k) {
            let slices: Vec<&[DiagramTree]> = comp.iter().map(|&m| cache[m].as_slice()).collect();
            for children in cartesian(&slices) {
                trees.push(DiagramTree::node(children));
            }
        }
    }
    trees.sort_by_key(DiagramTree::encoding);
    Ok(trees)
}

fn node_weight(table: &RationalCoefficientTable, k: usize) -> BigRational {
    if k == 1 {
        BigRational::one()
    } else {
        table.a(k).clone()
    }
}

fn subtree_weight(table: &RationalCoefficientTable, t: &DiagramTree) -> BigRational {
    let mut w = node_weight(table, t.arity());
    for c in &t.children {
        w *= subtree_weight(table, c);
    }
    w
}

/// Exact rational weight of a generator-variant tree: the product of `a_k`
/// over even-arity nodes (with `a_0 = 1`).
pub fn generator_tree_weight(t: &DiagramTree) -> Result<BigRational> {
    if !t.is_generator_admissible() {
        return Err(SwError::NotAdmissible(format!("{:?} is not generator-admissible", t.encoding())));
    }
    let table = bernoulli_coefficients(t.order())?;
    Ok(subtree_weight(&table, t))
}

/// Exact rational weight of an H-variant tree: `b_k` at the root times the
/// generator weights below.
pub fn heff_tree_weight(t: &DiagramTree) -> Result<BigRational> {
    if !t.is_heff_admissible() {
        return Err(SwError::NotAdmissible(format!("{:?} is not heff-admissible", t.encoding())));
    }
    let table = bernoulli_coefficients(t.order())?;
    let mut w = table.b(t.arity()).clone();
    for c in &t.children {
        w *= subtree_weight(&table, c);
    }
    Ok(w)
}

/// Fixed split and perturbation parts shared by all tree evaluations.
pub struct DiagramContext<'a> {
    split: &'a SpectralSplit,
    v_d: CMat,
    v_od: CMat,
}

impl<'a> DiagramContext<'a> {
    pub fn new(split: &'a SpectralSplit, v: &CMat) -> Result<Self> {
        validate_hermitian(v, "V")?;
        if v.nrows() != split.dim() {
            return Err(SwError::DimensionMismatch { expected: split.dim(), got: v.nrows() });
        }
        let (v_d, v_od) = block_split(v, split.p0())?;
        Ok(DiagramContext { split, v_d, v_od })
    }

    pub fn split(&self) -> &SpectralSplit {
        self.split
    }

    fn eval_subtree(&self, t: &DiagramTree) -> Result<CMat> {
        let k = t.arity();
        if k == 0 {
            return superop_l(self.split, &self.v_od);
        }
        if k == 1 {
            let child = self.eval_subtree(&t.children[0])?;
            return Ok(superop_l(self.split, &comm(&self.v_d, &child))?.scale(-1.0));
        }
        superop_l(self.split, &self.nested_core(t)?)
    }

    /// `[O_1, [O_2, ... [O_k, V_od] ...]]` over the children of `t`.
    fn nested_core(&self, t: &DiagramTree) -> Result<CMat> {
        let mut acc = self.v_od.clone();
        for c in t.children.iter().rev() {
            let op = self.eval_subtree(c)?;
            acc = comm(&op, &acc);
        }
        Ok(acc)
    }
}

/// Unweighted operator of a generator-variant tree.
pub fn evaluate_generator_tree(ctx: &DiagramContext, t: &DiagramTree) -> Result<CMat> {
    if !t.is_generator_admissible() {
        return Err(SwError::NotAdmissible(format!("{:?} is not generator-admissible", t.encoding())));
    }
    ctx.eval_subtree(t)
}

/// Unweighted operator of an H-variant tree: `P0 [O_1, ... [O_k, V_od]] P0`.
pub fn evaluate_heff_tree(ctx: &DiagramContext, t: &DiagramTree) -> Result<CMat> {
    if !t.is_heff_admissible() {
        return Err(SwError::NotAdmissible(format!("{:?} is not heff-admissible", t.encoding())));
    }
    let core = ctx.nested_core(t)?;
    let p0 = ctx.split.p0();
    Ok(p0 * core * p0)
}

/// Order-`n` generator coefficient summed over trees,
/// `S_n = sum_T w(T) O(T)`.
pub fn generator_via_diagrams(ctx: &DiagramContext, n: usize) -> Result<CMat> {
    let table = bernoulli_coefficients(n)?;
    let dim = ctx.split.dim();
    let mut acc = CMat::zeros(dim, dim);
    for t in enumerate_generator_trees(n)? {
        let w = subtree_weight(&table, &t).to_f64().expect("weight fits in f64");
        acc += evaluate_generator_tree(ctx, &t)?.scale(w);
    }
    Ok(acc)
}

/// Order-`n` effective-Hamiltonian coefficient summed over trees.
pub fn heff_via_diagrams(ctx: &DiagramContext, n: usize) -> Result<CMat> {
    let table = bernoulli_coefficients(n)?;
    let dim = ctx.split.dim();
    let mut acc = CMat::zeros(dim, dim);
    for t in enumerate_heff_trees(n)? {
        let mut w = table.b(t.arity()).clone();
        for c in t.children() {
            w *= subtree_weight(&table, c);
        }
        acc += evaluate_heff_tree(ctx, &t)?.scale(w.to_f64().expect("weight fits in f64"));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::make_split;
    use crate::operator::C64;
    use crate::perturbative::sw_series;
    use crate::random;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tree_counts() {
        let gen_counts: Vec<usize> =
            (1..=5).map(|n| enumerate_generator_trees(n).unwrap().len()).collect();
        assert_eq!(gen_counts, vec![1, 1, 2, 4, 10]);
        let heff_counts: Vec<usize> =
            (2..=6).map(|n| enumerate_heff_trees(n).unwrap().len()).collect();
        assert_eq!(heff_counts, vec![1, 1, 3, 7, 20]);
    }

    #[test]
    fn small_order_encodings() {
        let n3: Vec<Vec<u8>> =
            enumerate_heff_trees(3).unwrap().iter().map(DiagramTree::encoding).collect();
        assert_eq!(n3, vec![vec![1, 1, 0]]);
        let n4: Vec<Vec<u8>> =
            enumerate_heff_trees(4).unwrap().iter().map(DiagramTree::encoding).collect();
        assert_eq!(n4, vec![vec![1, 1, 1, 0], vec![1, 2, 0, 0], vec![3, 0, 0, 0]]);
        let s3: Vec<Vec<u8>> =
            enumerate_generator_trees(3).unwrap().iter().map(DiagramTree::encoding).collect();
        assert_eq!(s3, vec![vec![1, 1, 0], vec![2, 0, 0]]);
    }

    #[test]
    fn encodings_roundtrip_and_reject_garbage() {
        for n in 2..=6 {
            for t in enumerate_heff_trees(n).unwrap() {
                let again = DiagramTree::from_encoding(&t.encoding()).unwrap();
                assert_eq!(again, t);
            }
        }
        assert!(DiagramTree::from_encoding(&[2, 0]).is_err(), "truncated");
        assert!(DiagramTree::from_encoding(&[0, 0]).is_err(), "trailing");
    }

    #[test]
    fn weights_of_small_trees() {
        let half = BigRational::new(1.into(), 2.into());
        let third = BigRational::new(1.into(), 3.into());
        // order 2: single chain, weight b_1 = 1/2
        let t2 = DiagramTree::from_encoding(&[1, 0]).unwrap();
        assert_eq!(heff_tree_weight(&t2).unwrap(), half);
        // generator tree [2,0,0]: weight a_2 = 1/3
        let s3 = DiagramTree::from_encoding(&[2, 0, 0]).unwrap();
        assert_eq!(generator_tree_weight(&s3).unwrap(), third);
        // H tree [1,2,0,0]: b_1 * a_2 = 1/6
        let t4 = DiagramTree::from_encoding(&[1, 2, 0, 0]).unwrap();
        assert_eq!(heff_tree_weight(&t4).unwrap(), half.clone() * third);
        // H tree [3,0,0,0]: b_3 = -1/24
        let t4b = DiagramTree::from_encoding(&[3, 0, 0, 0]).unwrap();
        assert_eq!(heff_tree_weight(&t4b).unwrap(), BigRational::new((-1).into(), 24.into()));
    }

    #[test]
    fn admissibility_is_enforced() {
        // even root is not an H tree
        let t = DiagramTree::from_encoding(&[2, 0, 0]).unwrap();
        assert!(matches!(heff_tree_weight(&t), Err(SwError::NotAdmissible(_))));
        // odd non-root arity > 1 is not allowed anywhere
        let bad = DiagramTree::from_encoding(&[1, 3, 0, 0, 0]).unwrap();
        assert!(!bad.is_heff_admissible());
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let h0 = random::random_gapped_hermitian(&mut rng, 5, 2, 0.3, 2.0);
        let split = make_split(&h0, (-0.1, 0.4)).unwrap();
        let v = random::random_hermitian(&mut rng, 5, 1.0);
        let ctx = DiagramContext::new(&split, &v).unwrap();
        assert!(matches!(evaluate_heff_tree(&ctx, &bad), Err(SwError::NotAdmissible(_))));
    }

    #[test]
    fn order_three_closed_form() {
        // the single order-3 H tree evaluates to -P0 [L([V_d, L(V_od)]), V_od] P0
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let h0 = random::random_gapped_hermitian(&mut rng, 6, 2, 0.4, 1.8);
        let split = make_split(&h0, (-0.1, 0.5)).unwrap();
        let v = random::random_hermitian(&mut rng, 6, 1.0);
        let ctx = DiagramContext::new(&split, &v).unwrap();
        let t = DiagramTree::from_encoding(&[1, 1, 0]).unwrap();
        let got = evaluate_heff_tree(&ctx, &t).unwrap();
        let (v_d, v_od) = block_split(&v, split.p0()).unwrap();
        let s1 = superop_l(&split, &v_od).unwrap();
        let inner = superop_l(&split, &comm(&v_d, &s1)).unwrap();
        let expect = split.p0() * comm(&inner, &v_od).scale(-1.0) * split.p0();
        assert!((&got - &expect).norm() < 1e-12);
    }

    #[test]
    fn diagrams_match_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..8 {
            let dim = rng.gen_range(4..=8);
            let low = rng.gen_range(1..dim.min(4));
            let h0 = random::random_gapped_hermitian(&mut rng, dim, low, 0.5, 2.0);
            let split = make_split(&h0, (-0.1, 0.6)).unwrap();
            let v = random::random_hermitian(&mut rng, dim, 1.0);
            let series = sw_series(&split, &v, 6).unwrap();
            let ctx = DiagramContext::new(&split, &v).unwrap();
            for n in 2..=6 {
                let viat = heff_via_diagrams(&ctx, n).unwrap();
                let scale = series.heff.coeffs[n].norm().max(1.0);
                assert!(
                    (&viat - &series.heff.coeffs[n]).norm() < 1e-10 * scale,
                    "H coefficient mismatch at order {n}"
                );
            }
            for n in 1..=6 {
                let viat = generator_via_diagrams(&ctx, n).unwrap();
                let scale = series.s.coeffs[n].norm().max(1.0);
                assert!(
                    (&viat - &series.s.coeffs[n]).norm() < 1e-10 * scale,
                    "S coefficient mismatch at order {n}"
                );
            }
        }
    }

    #[test]
    fn diagonal_perturbation_kills_every_tree() {
        // V block-diagonal: V_od = 0, so every tree operator vanishes
        let h0 = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new([0.0, 2.0, 3.0][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let split = make_split(&h0, (-0.5, 0.5)).unwrap();
        let v = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new(1.0 + i as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let ctx = DiagramContext::new(&split, &v).unwrap();
        for n in 2..=5 {
            assert!(heff_via_diagrams(&ctx, n).unwrap().norm() < 1e-14);
        }
    }
}
