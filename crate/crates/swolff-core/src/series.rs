//! Formal power series with matrix coefficients.
//!
//! Two gradings are used: a single expansion parameter (univariate, indexed
//! by order) and one variable per lattice edge (multivariate, indexed by a
//! [`MultiDeg`]). The univariate form is the one-variable case of the
//! multivariate one, and conversions between them are exact.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::operator::CMat;

/// Multidegree over a fixed number of variables. Ordering is by total degree
/// first, then lexicographic, which fixes the canonical term order
/// everywhere (reports, summation, serialization).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiDeg(pub Vec<u8>);

impl MultiDeg {
    pub fn zero(vars: usize) -> Self {
        MultiDeg(vec![0; vars])
    }

    pub fn unit(vars: usize, var: usize) -> Self {
        let mut d = vec![0; vars];
        d[var] = 1;
        MultiDeg(d)
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&d| d as usize).sum()
    }

    pub fn vars(&self) -> usize {
        self.0.len()
    }

    /// Indices of the variables appearing with nonzero degree.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &d)| d > 0).map(|(i, _)| i).collect()
    }

    pub fn checked_sub(&self, other: &MultiDeg) -> Option<MultiDeg> {
        let mut out = self.0.clone();
        for (o, &s) in out.iter_mut().zip(other.0.iter()) {
            *o = o.checked_sub(s)?;
        }
        Some(MultiDeg(out))
    }

    pub fn plus(&self, other: &MultiDeg) -> MultiDeg {
        MultiDeg(self.0.iter().zip(other.0.iter()).map(|(&a, &b)| a + b).collect())
    }

    /// All multidegrees `0 < nu <= self` (componentwise), canonical order.
    pub fn proper_divisors(&self) -> Vec<MultiDeg> {
        let mut out = Vec::new();
        let mut cur = MultiDeg::zero(self.vars());
        loop {
            // odometer over the box [0, self]
            let mut k = 0;
            loop {
                if k == self.vars() {
                    out.sort();
                    return out;
                }
                if cur.0[k] < self.0[k] {
                    cur.0[k] += 1;
                    break;
                }
                cur.0[k] = 0;
                k += 1;
            }
            out.push(cur.clone());
        }
    }
}

impl PartialOrd for MultiDeg {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiDeg {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total().cmp(&other.total()).then_with(|| self.0.cmp(&other.0))
    }
}

impl std::fmt::Display for MultiDeg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// Structural claim shared by all coefficients of a series, relative to the
/// spectral split it was built from.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Supported on the low block `P0 . P0`.
    LowBlock,
    /// Off-diagonal: `P0 . Q0 + Q0 . P0`.
    OffDiagonal,
    /// Block-diagonal: `P0 . P0 + Q0 . Q0`.
    BlockDiagonal,
    General,
}

/// Univariate series `sum_q coeffs[q] eps^q`; the order is the index.
#[derive(Clone, Debug)]
pub struct SeriesCoefficients {
    pub coeffs: Vec<CMat>,
    pub kind: BlockKind,
}

impl SeriesCoefficients {
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.first().map_or(0, |c| c.nrows())
    }

    /// Evaluate the truncated series at `eps`, summing low order first.
    pub fn evaluate(&self, eps: f64) -> CMat {
        let dim = self.dim();
        let mut acc = CMat::zeros(dim, dim);
        let mut pow = 1.0f64;
        for c in &self.coeffs {
            acc += c.scale(pow);
            pow *= eps;
        }
        acc
    }

    /// Evaluate only orders `lo..=hi`.
    pub fn evaluate_range(&self, eps: f64, lo: usize, hi: usize) -> CMat {
        let dim = self.dim();
        let mut acc = CMat::zeros(dim, dim);
        let mut pow = eps.powi(lo as i32);
        for q in lo..=hi.min(self.order()) {
            acc += self.coeffs[q].scale(pow);
            pow *= eps;
        }
        acc
    }

    pub fn norms(&self) -> Vec<f64> {
        self.coeffs.iter().map(crate::operator::operator_norm).collect()
    }
}

/// Multivariate series over edge variables.
#[derive(Clone, Debug)]
pub struct EdgeMonomialSeries {
    pub vars: usize,
    /// Truncation: all terms have total degree <= trunc.
    pub trunc: usize,
    pub terms: BTreeMap<MultiDeg, CMat>,
    pub kind: BlockKind,
}

impl EdgeMonomialSeries {
    pub fn evaluate(&self, eps: &[f64]) -> CMat {
        assert_eq!(eps.len(), self.vars);
        let dim = self.terms.values().next().map_or(0, |c| c.nrows());
        let mut acc = CMat::zeros(dim, dim);
        for (mu, c) in &self.terms {
            let mut w = 1.0f64;
            for (e, &d) in mu.0.iter().enumerate() {
                w *= eps[e].powi(d as i32);
            }
            acc += c.scale(w);
        }
        acc
    }

    /// Collapse all variables onto a single one (every edge shares eps),
    /// producing the univariate coefficients by total degree.
    pub fn collapse(&self) -> SeriesCoefficients {
        let dim = self.terms.values().next().map_or(0, |c| c.nrows());
        let mut coeffs = vec![CMat::zeros(dim, dim); self.trunc + 1];
        for (mu, c) in &self.terms {
            coeffs[mu.total()] += c;
        }
        SeriesCoefficients { coeffs, kind: self.kind }
    }
}

/// Formal exponential of a univariate series with zero order-0 term:
/// `E[m] = sum_k 1/k! (S^k)[m]`, truncated at `trunc`.
pub fn exp_series(s: &[CMat], trunc: usize) -> Vec<CMat> {
    let dim = s.first().map_or(0, |c| c.nrows());
    let id = crate::operator::identity(dim);
    let mut out: Vec<CMat> = vec![CMat::zeros(dim, dim); trunc + 1];
    out[0] = id.clone();
    // powers[m] = coefficient of eps^m in S^k, built up k = 1, 2, ...
    let mut power: Vec<CMat> = s.iter().take(trunc + 1).cloned().collect();
    power.resize(trunc + 1, CMat::zeros(dim, dim));
    let mut factorial = 1.0f64;
    let mut k = 1usize;
    loop {
        factorial *= k as f64;
        for m in 0..=trunc {
            out[m] += power[m].scale(1.0 / factorial);
        }
        k += 1;
        if k > trunc {
            break;
        }
        // power <- power * S (orders above trunc discarded)
        let mut next = vec![CMat::zeros(dim, dim); trunc + 1];
        for m in 0..=trunc {
            for r in 1..=m {
                if s.len() > r {
                    next[m] += &power[m - r] * &s[r];
                }
            }
        }
        power = next;
    }
    out
}

/// Product of two univariate series, truncated.
pub fn product_series(a: &[CMat], b: &[CMat], trunc: usize) -> Vec<CMat> {
    let dim = a.first().map_or(0, |c| c.nrows());
    let mut out = vec![CMat::zeros(dim, dim); trunc + 1];
    for m in 0..=trunc {
        for r in 0..=m {
            if r < a.len() && m - r < b.len() {
                out[m] += &a[r] * &b[m - r];
            }
        }
    }
    out
}

/// Formal logarithm of a univariate series with order-0 term equal to the
/// identity: `log(I + D) = sum_r (-1)^{r+1}/r D^r`.
pub fn log_series(c: &[CMat], trunc: usize) -> Vec<CMat> {
    let dim = c.first().map_or(0, |m| m.nrows());
    let mut d: Vec<CMat> = c.iter().take(trunc + 1).cloned().collect();
    d.resize(trunc + 1, CMat::zeros(dim, dim));
    d[0] -= crate::operator::identity(dim);
    let mut out = vec![CMat::zeros(dim, dim); trunc + 1];
    let mut power = d.clone();
    for r in 1..=trunc.max(1) {
        let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
        for m in 0..=trunc {
            out[m] += power[m].scale(sign / r as f64);
        }
        if r == trunc {
            break;
        }
        let mut next = vec![CMat::zeros(dim, dim); trunc + 1];
        for m in 0..=trunc {
            // D has no order-0 part, so the product starts at order 1
            for k in 1..m {
                next[m] += &power[m - k] * &d[k];
            }
            if m >= 1 {
                next[m] += &power[0] * &d[m];
            }
        }
        power = next;
    }
    out
}

/// Scale every coefficient of a series by `z`.
pub fn scale_series(s: &[CMat], z: C64) -> Vec<CMat> {
    s.iter().map(|c| c.map(|v| v * z)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{exp_anti_hermitian, identity};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn multideg_order_is_total_then_lex() {
        let a = MultiDeg(vec![0, 2]);
        let b = MultiDeg(vec![1, 0]);
        let c = MultiDeg(vec![1, 1]);
        assert!(b < a, "total degree dominates");
        assert!(a < c);
        let box_ = MultiDeg(vec![1, 1]).proper_divisors();
        assert_eq!(
            box_,
            vec![MultiDeg(vec![0, 1]), MultiDeg(vec![1, 0]), MultiDeg(vec![1, 1])]
        );
    }

    #[test]
    fn exp_log_series_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trunc = 5;
        let mut s: Vec<CMat> = vec![CMat::zeros(4, 4)];
        for _ in 1..=trunc {
            s.push(random::random_anti_hermitian(&mut rng, 4, 0.8));
        }
        let e = exp_series(&s, trunc);
        let l = log_series(&e, trunc);
        for m in 0..=trunc {
            assert!((&l[m] - &s[m]).norm() < 1e-10, "log(exp(S)) != S at order {m}");
        }
    }

    #[test]
    fn exp_series_matches_dense_exponential() {
        // single-order generator: the truncated series must match exp(eps K)
        // up to the truncation error
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = random::random_anti_hermitian(&mut rng, 4, 1.0);
        let trunc = 8;
        let mut s = vec![CMat::zeros(4, 4), k.clone()];
        s.resize(trunc + 1, CMat::zeros(4, 4));
        let e = exp_series(&s, trunc);
        let eps = 0.3f64;
        let mut acc = CMat::zeros(4, 4);
        let mut pow = 1.0;
        for c in &e {
            acc += c.scale(pow);
            pow *= eps;
        }
        let dense = exp_anti_hermitian(&k.scale(eps)).unwrap();
        assert!((acc - dense).norm() < eps.powi(9) * 3.0);
    }

    #[test]
    fn product_of_series_with_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trunc = 4;
        let mut s: Vec<CMat> = vec![CMat::zeros(3, 3)];
        for _ in 1..=trunc {
            s.push(random::random_anti_hermitian(&mut rng, 3, 0.5));
        }
        let e = exp_series(&s, trunc);
        let eneg = exp_series(&scale_series(&s, C64::new(-1.0, 0.0)), trunc);
        let prod = product_series(&e, &eneg, trunc);
        assert!((&prod[0] - identity(3)).norm() < 1e-12);
        for m in 1..=trunc {
            assert!(prod[m].norm() < 1e-12, "exp(S) exp(-S) != I at order {m}");
        }
    }
}
