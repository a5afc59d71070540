//! Perturbative Schrieffer-Wolff expansion.
//!
//! With `O(X) = P0 X Q0 + Q0 X P0`, `D(X) = X - O(X)` and the cross-block
//! inverse `L` of `ad_{H0}` (see [`superop_l`]), the anti-hermitian generator
//! `S = sum_n eps^n S_n` is fixed order by order so that `e^S H e^{-S}` is
//! block-diagonal:
//!
//! ```text
//! S_1 = L(V_od)
//! S_n = -L Vhat_d(S_{n-1}) + sum_{j>=1} a_{2j} L Shat^{2j}(V_od)_{n-1}
//! ```
//!
//! where `Xhat = [X, .]`, `Shat^k(V_od)_m` sums `Shat_{n_1}..Shat_{n_k}(V_od)`
//! over all compositions `n_1+..+n_k = m`, and `a_m` are the Taylor
//! coefficients of `x coth x`. The effective Hamiltonian collects the odd
//! powers with the coefficients `b_m` of `tanh(x/2)`:
//!
//! ```text
//! H_eff = H0 P0 + eps P0 V P0
//!         + sum_{n>=2} eps^n sum_{j>=1} b_{2j-1} P0 Shat^{2j-1}(V_od)_{n-1} P0
//! ```
//!
//! The recursion is implemented over multidegrees, one variable per coupling
//! term; a single coupling is the one-variable case. All operators are kept
//! in the eigenbasis of `H0` internally (`L` is entrywise there) and rotated
//! back at the end.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64 as C64;

use crate::coefficients::{bernoulli_coefficients, RationalCoefficientTable};
use crate::error::{Result, SwError};
use crate::exact::{PerturbedProblem, SpectralSplit};
use crate::operator::{comm, validate_hermitian, CMat};
use crate::series::{BlockKind, EdgeMonomialSeries, MultiDeg, SeriesCoefficients};
use crate::tol;

/// Cross-block inverse of `ad_{H0}`: in the eigenbasis of the split,
///
/// ```text
/// L(X)_ij = O(X)_ij / (E_i - E_j)   for i, j on opposite sides of the window
/// L(X)_ij = 0                        otherwise
/// ```
///
/// satisfying `L([H0, X]) = [H0, L(X)] = O(X)` and `||L(X)|| <= ||O(X)||/Delta`.
pub fn superop_l(split: &SpectralSplit, x: &CMat) -> Result<CMat> {
    let n = split.dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(SwError::DimensionMismatch { expected: n, got: x.nrows() });
    }
    let w = &split.eig().vectors;
    let y = w.adjoint() * x * w;
    let z = apply_l_eigenbasis(split, &y)?;
    Ok(w * z * w.adjoint())
}

fn low_flags(split: &SpectralSplit) -> Vec<bool> {
    let mut flags = vec![false; split.dim()];
    for &k in split.low_indices() {
        flags[k] = true;
    }
    flags
}

/// `L` in the eigenbasis: entrywise divide on the cross blocks.
fn apply_l_eigenbasis(split: &SpectralSplit, y: &CMat) -> Result<CMat> {
    let n = split.dim();
    let flags = low_flags(split);
    let vals = &split.eig().values;
    let required = if split.gap().is_finite() { split.gap() / 2.0 } else { 0.0 };
    let mut z = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if flags[i] != flags[j] {
                let denom = vals[i] - vals[j];
                if denom.abs() < required {
                    return Err(SwError::InternalGap { denom: denom.abs(), required });
                }
                z[(i, j)] = y[(i, j)] / C64::new(denom, 0.0);
            }
        }
    }
    Ok(z)
}

/// Generator and effective-Hamiltonian series over per-coupling variables.
/// Coefficients are full-space operators in the original basis.
#[derive(Clone, Debug)]
pub struct GlobalSeries {
    pub vars: usize,
    pub trunc: usize,
    /// `S_mu`, block-off-diagonal anti-hermitian coefficients; no order-0 term.
    pub s: BTreeMap<MultiDeg, CMat>,
    /// `H_eff,mu` low-block coefficients, including order 0 (`P0 H0 P0`).
    pub heff: BTreeMap<MultiDeg, CMat>,
}

impl GlobalSeries {
    pub fn s_series(&self) -> EdgeMonomialSeries {
        EdgeMonomialSeries {
            vars: self.vars,
            trunc: self.trunc,
            terms: self.s.clone(),
            kind: BlockKind::OffDiagonal,
        }
    }

    pub fn heff_series(&self) -> EdgeMonomialSeries {
        EdgeMonomialSeries {
            vars: self.vars,
            trunc: self.trunc,
            terms: self.heff.clone(),
            kind: BlockKind::LowBlock,
        }
    }
}

/// All multidegrees with `1 <= total <= trunc`, canonical order.
pub(crate) fn all_degrees(vars: usize, trunc: usize) -> Vec<MultiDeg> {
    let mut out = Vec::new();
    let mut cur = MultiDeg::zero(vars);
    'outer: loop {
        let mut k = 0;
        loop {
            if k == vars {
                break 'outer;
            }
            if (cur.0[k] as usize) < trunc {
                cur.0[k] += 1;
                break;
            }
            cur.0[k] = 0;
            k += 1;
        }
        if cur.total() <= trunc && cur.total() >= 1 {
            out.push(cur.clone());
        }
    }
    out.sort();
    out
}

/// Build the coupled generator / effective-Hamiltonian recursion.
///
/// `couplings` holds one hermitian operator per variable; the perturbation is
/// `sum_e eps_e V_e`. Truncation is by total degree. A single variable may go
/// up to [`tol::MAX_ORDER_GLOBAL`]; several variables are capped at
/// [`tol::MAX_ORDER_MULTI`] and [`tol::MAX_EDGES_MULTI`].
pub fn sw_series_multi(
    split: &SpectralSplit,
    couplings: &[CMat],
    trunc: usize,
) -> Result<GlobalSeries> {
    let vars = couplings.len();
    if vars == 0 {
        return Err(SwError::Validation("no coupling operators given".into()));
    }
    let max = if vars == 1 { tol::MAX_ORDER_GLOBAL } else { tol::MAX_ORDER_MULTI };
    if trunc > max {
        return Err(SwError::OrderTooLarge { order: trunc, max });
    }
    if vars > tol::MAX_EDGES_MULTI {
        return Err(SwError::Validation(format!(
            "{vars} coupling variables exceed the supported maximum {}",
            tol::MAX_EDGES_MULTI
        )));
    }
    let n = split.dim();
    for v in couplings {
        validate_hermitian(v, "coupling")?;
        if v.nrows() != n {
            return Err(SwError::DimensionMismatch { expected: n, got: v.nrows() });
        }
    }
    let table = bernoulli_coefficients(trunc.max(1))?;
    let w = &split.eig().vectors;
    let flags = low_flags(split);
    let cross = |i: usize, j: usize| flags[i] != flags[j];
    let od_part = |x: &CMat| CMat::from_fn(n, n, |i, j| if cross(i, j) { x[(i, j)] } else { C64::new(0.0, 0.0) });
    let d_part = |x: &CMat| CMat::from_fn(n, n, |i, j| if cross(i, j) { C64::new(0.0, 0.0) } else { x[(i, j)] });
    let low_sandwich = |x: &CMat| {
        CMat::from_fn(n, n, |i, j| if flags[i] && flags[j] { x[(i, j)] } else { C64::new(0.0, 0.0) })
    };

    // couplings in the eigenbasis, split into diagonal and cross parts
    let v_eig: Vec<CMat> = couplings.iter().map(|v| w.adjoint() * v * w).collect();
    let v_d: Vec<CMat> = v_eig.iter().map(&d_part).collect();
    let v_od: Vec<CMat> = v_eig.iter().map(&od_part).collect();

    let mut s: BTreeMap<MultiDeg, CMat> = BTreeMap::new();
    let mut heff: BTreeMap<MultiDeg, CMat> = BTreeMap::new();
    // g[(k, mu)] = Shat^k(V_od) at total degree mu (V_od unit included)
    let mut g: HashMap<(usize, MultiDeg), CMat> = HashMap::new();
    for (e, vo) in v_od.iter().enumerate() {
        g.insert((0, MultiDeg::unit(vars, e)), vo.clone());
    }

    // order 0 of the effective series
    let h0_eig = w.adjoint() * split.h0() * w;
    heff.insert(MultiDeg::zero(vars), low_sandwich(&h0_eig));

    for mu in all_degrees(vars, trunc) {
        let m = mu.total();
        // extend the nested-commutator tables at this degree
        for k in 1..m {
            let mut acc = CMat::zeros(n, n);
            let mut any = false;
            for nu in mu.proper_divisors() {
                if nu == mu {
                    continue;
                }
                let rest = mu.checked_sub(&nu).expect("divisor");
                if let (Some(s_nu), Some(g_rest)) = (s.get(&nu), g.get(&(k - 1, rest))) {
                    acc += comm(s_nu, g_rest);
                    any = true;
                }
            }
            if any {
                g.insert((k, mu.clone()), acc);
            }
        }

        if m == 1 {
            let e = mu.support()[0];
            s.insert(mu.clone(), apply_l_eigenbasis(split, &v_od[e])?);
            heff.insert(mu.clone(), low_sandwich(&v_eig[e]));
            continue;
        }

        // -L Vhat_d(S_{mu - e}) summed over the couplings present in mu
        let mut arg = CMat::zeros(n, n);
        for e in 0..vars {
            if mu.0[e] == 0 {
                continue;
            }
            let prev = mu.checked_sub(&MultiDeg::unit(vars, e)).expect("unit");
            if let Some(s_prev) = s.get(&prev) {
                arg += comm(&v_d[e], s_prev);
            }
        }
        let mut s_mu = apply_l_eigenbasis(split, &arg)?.scale(-1.0);
        let mut j = 1;
        while 2 * j + 1 <= m {
            if let Some(g_even) = g.get(&(2 * j, mu.clone())) {
                let a = table.a_f64(2 * j);
                s_mu += apply_l_eigenbasis(split, g_even)?.scale(a);
            }
            j += 1;
        }
        s.insert(mu.clone(), s_mu);

        let mut h_mu = CMat::zeros(n, n);
        let mut j = 1;
        while 2 * j - 1 <= m - 1 {
            if let Some(g_odd) = g.get(&(2 * j - 1, mu.clone())) {
                let b = table.b_f64(2 * j - 1);
                h_mu += low_sandwich(g_odd).scale(b);
            }
            j += 1;
        }
        heff.insert(mu.clone(), h_mu);
    }

    // rotate everything back to the original basis
    let back = |x: &CMat| w * x * w.adjoint();
    let s = s.into_iter().map(|(k, v)| (k, back(&v))).collect();
    let heff = heff.into_iter().map(|(k, v)| (k, back(&v))).collect();
    Ok(GlobalSeries { vars, trunc, s, heff })
}

fn to_univariate(map: &BTreeMap<MultiDeg, CMat>, trunc: usize, dim: usize, kind: BlockKind) -> SeriesCoefficients {
    let mut coeffs = vec![CMat::zeros(dim, dim); trunc + 1];
    for (mu, c) in map {
        coeffs[mu.total()] = c.clone();
    }
    SeriesCoefficients { coeffs, kind }
}

/// Generator and effective series for a single coupling.
#[derive(Clone, Debug)]
pub struct SwSeries {
    pub s: SeriesCoefficients,
    pub heff: SeriesCoefficients,
}

/// One-variable wrapper around [`sw_series_multi`].
pub fn sw_series(split: &SpectralSplit, v: &CMat, order: usize) -> Result<SwSeries> {
    let g = sw_series_multi(split, std::slice::from_ref(v), order)?;
    Ok(SwSeries {
        s: to_univariate(&g.s, order, split.dim(), BlockKind::OffDiagonal),
        heff: to_univariate(&g.heff, order, split.dim(), BlockKind::LowBlock),
    })
}

/// `S_1..S_n` for the problem's coupling (order-0 coefficient is zero).
pub fn generator_series(prob: &PerturbedProblem, order: usize) -> Result<SeriesCoefficients> {
    Ok(sw_series(&prob.split, prob.v(), order)?.s)
}

/// `H_eff` coefficients through `eps^order`, low-block on the full space.
pub fn heff_series(prob: &PerturbedProblem, order: usize) -> Result<SeriesCoefficients> {
    Ok(sw_series(&prob.split, prob.v(), order)?.heff)
}

/// Guaranteed convergence radius of the series,
/// `rho_c = eps_c / (8 (1 + 2|I0| / (pi Delta)))` with `|I0|` the window width.
pub fn convergence_radius(prob: &PerturbedProblem) -> f64 {
    let eps_c = prob.epsilon_c();
    if !eps_c.is_finite() {
        return f64::INFINITY;
    }
    let (lo, hi) = prob.split.window();
    let width = hi - lo;
    eps_c / (8.0 * (1.0 + 2.0 * width / (std::f64::consts::PI * prob.split.gap())))
}

/// Coefficient tables used by the series, re-exported for reports.
pub fn coefficient_table(order: usize) -> Result<RationalCoefficientTable> {
    bernoulli_coefficients(order)
}

/// Simplified fourth-order coefficient
///
/// ```text
/// P0 [ 1/8 Shat_1^3(V_od) - 1/2 Vhat_od (L Vhat_d)^2 (S_1) ] P0
/// ```
///
/// valid only when `H0` restricted to the low subspace is a scalar; refused
/// otherwise. Agrees with the order-4 coefficient of [`heff_series`] in that
/// case.
pub fn heff4_simplified(prob: &PerturbedProblem) -> Result<CMat> {
    let split = &prob.split;
    let lows = split.low_values();
    let spread = lows.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - lows.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol_scalar = tol::TOL_ROT * split.h0_norm().max(1.0);
    if spread > tol_scalar {
        return Err(SwError::ScalarConditionViolated { spread, tol: tol_scalar });
    }
    let p0 = split.p0();
    let q0 = split.q0();
    let v = prob.v();
    let v_od = p0 * v * q0 + q0 * v * p0;
    let v_d = v - &v_od;
    let s1 = superop_l(split, &v_od)?;
    let triple = comm(&s1, &comm(&s1, &comm(&s1, &v_od)));
    let chain = comm(&v_od, &superop_l(split, &comm(&v_d, &superop_l(split, &comm(&v_d, &s1))?))?);
    let inner = triple.scale(1.0 / 8.0) - chain.scale(0.5);
    Ok(p0 * inner * p0)
}
