//! Exact rational Taylor coefficients of `x coth x` and `tanh(x/2)`.
//!
//! The generator recursion weighs its terms with the Taylor coefficients of
//! `x coth x = sum_m a_m x^m` (even m) and the effective Hamiltonian with
//! those of `tanh(x/2) = sum_m b_m x^m` (odd m):
//!
//! ```text
//! a_m = 2^m B_m / m!                      (m even)
//! b_{2n-1} = 2 (2^{2n} - 1) B_{2n} / (2n)!
//! ```
//!
//! with `B_m` the Bernoulli numbers. Both tables are kept as exact
//! `BigRational`s and converted to floating point only where a numerical
//! series is assembled.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Result, SwError};
use crate::tol::MAX_BERNOULLI_ORDER;

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Bernoulli numbers `B_0..=B_max` (convention `B_1 = -1/2`), by the
/// recurrence `sum_{j<=m} C(m+1, j) B_j = 0`.
pub fn bernoulli_numbers(max: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(max + 1);
    for m in 0..=max {
        if m == 0 {
            b.push(BigRational::one());
            continue;
        }
        // binomial C(m+1, j) built incrementally
        let mut binom = BigInt::one();
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            // binom = C(m+1, j)
            acc += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / big((m + 1) as i64));
    }
    b
}

/// Exact coefficient tables for the series rebuilt from Bernoulli numbers.
#[derive(Clone, Debug)]
pub struct RationalCoefficientTable {
    max_order: usize,
    /// `a[m]` for all m up to `max_order`; odd entries are exactly zero.
    a: Vec<BigRational>,
    /// `b[m]` for all m up to `max_order`; even entries are exactly zero.
    b: Vec<BigRational>,
}

/// Build the tables up to `max_order` (inclusive). Orders above
/// [`MAX_BERNOULLI_ORDER`] are refused.
pub fn bernoulli_coefficients(max_order: usize) -> Result<RationalCoefficientTable> {
    if max_order > MAX_BERNOULLI_ORDER {
        return Err(SwError::OrderTooLarge { order: max_order, max: MAX_BERNOULLI_ORDER });
    }
    // b_{2n-1} needs B_{2n}
    let bern = bernoulli_numbers(max_order + 1);
    let mut a = vec![BigRational::zero(); max_order + 1];
    let mut b = vec![BigRational::zero(); max_order + 1];
    let mut factorial = BigInt::one();
    let mut pow2 = BigInt::one();
    for m in 0..=max_order {
        if m > 0 {
            factorial *= BigInt::from(m);
            pow2 *= BigInt::from(2);
        }
        if m % 2 == 0 {
            a[m] = bern[m].clone() * BigRational::from_integer(pow2.clone())
                / BigRational::from_integer(factorial.clone());
        } else {
            // m = 2n - 1, so (2n)! = (m+1)! and the Bernoulli index is m+1
            let n2 = m + 1;
            let fact2n = factorial.clone() * BigInt::from(n2);
            let pow = BigInt::from(2).pow(n2 as u32) - BigInt::one();
            b[m] = big(2) * BigRational::from_integer(pow) * bern[n2].clone()
                / BigRational::from_integer(fact2n);
        }
    }
    Ok(RationalCoefficientTable { max_order, a, b })
}

impl RationalCoefficientTable {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `a_m`, the x^m coefficient of `x coth x`. Zero for odd m.
    pub fn a(&self, m: usize) -> &BigRational {
        &self.a[m]
    }

    /// `b_m`, the x^m coefficient of `tanh(x/2)`. Zero for even m.
    pub fn b(&self, m: usize) -> &BigRational {
        &self.b[m]
    }

    pub fn a_f64(&self, m: usize) -> f64 {
        self.a[m].to_f64().expect("coefficient fits in f64")
    }

    pub fn b_f64(&self, m: usize) -> f64 {
        self.b[m].to_f64().expect("coefficient fits in f64")
    }

    /// Rational as a `"p/q"` string, for reports.
    pub fn a_string(&self, m: usize) -> String {
        rational_string(&self.a[m])
    }

    pub fn b_string(&self, m: usize) -> String {
        rational_string(&self.b[m])
    }
}

pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else if r.denom().is_negative() {
        // num-rational keeps denominators positive; defensive only
        format!("{}/{}", -r.numer(), -r.denom())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(n: i64, d: i64) -> BigRational {
        big(n) / big(d)
    }

    #[test]
    fn bernoulli_first_values() {
        let b = bernoulli_numbers(12);
        assert_eq!(b[0], big(1));
        assert_eq!(b[1], frac(-1, 2));
        assert_eq!(b[2], frac(1, 6));
        assert_eq!(b[3], big(0));
        assert_eq!(b[4], frac(-1, 30));
        assert_eq!(b[6], frac(1, 42));
        assert_eq!(b[8], frac(-1, 30));
        assert_eq!(b[10], frac(5, 66));
        assert_eq!(b[12], frac(-691, 2730));
    }

    #[test]
    fn frozen_table_values() {
        let t = bernoulli_coefficients(8).unwrap();
        assert_eq!(*t.a(0), big(1));
        assert_eq!(*t.a(2), frac(1, 3));
        assert_eq!(*t.a(4), frac(-1, 45));
        assert_eq!(*t.a(6), frac(2, 945));
        assert_eq!(*t.b(1), frac(1, 2));
        assert_eq!(*t.b(3), frac(-1, 24));
        assert_eq!(*t.b(5), frac(1, 240));
        assert_eq!(*t.b(7), frac(-17, 40320));
        for m in (1..=7).step_by(2) {
            assert!(t.a(m).is_zero());
        }
        for m in (0..=8).step_by(2) {
            assert!(t.b(m).is_zero());
        }
    }

    /// Independent oracle: long division of the exact Taylor series of
    /// sinh(x/2) by cosh(x/2), never touching Bernoulli numbers.
    #[test]
    fn tanh_coefficients_by_series_division() {
        let n = 21;
        let mut fact = vec![BigRational::one(); n + 1];
        for m in 1..=n {
            fact[m] = fact[m - 1].clone() * big(m as i64);
        }
        let half_pow = |m: usize| {
            BigRational::one() / BigRational::from_integer(BigInt::from(2).pow(m as u32))
        };
        // sinh(x/2) = sum x^{2k+1} / ((2k+1)! 2^{2k+1}), cosh analogous
        let mut sinh = vec![BigRational::zero(); n + 1];
        let mut cosh = vec![BigRational::zero(); n + 1];
        for m in 0..=n {
            if m % 2 == 1 {
                sinh[m] = half_pow(m) / fact[m].clone();
            } else {
                cosh[m] = half_pow(m) / fact[m].clone();
            }
        }
        // quotient q with q * cosh = sinh
        let mut q = vec![BigRational::zero(); n + 1];
        for m in 0..=n {
            let mut acc = sinh[m].clone();
            for k in 0..m {
                acc -= q[k].clone() * cosh[m - k].clone();
            }
            q[m] = acc; // cosh[0] = 1
        }
        let t = bernoulli_coefficients(n).unwrap();
        for m in 0..=n {
            let expect = if m % 2 == 1 { q[m].clone() } else { BigRational::zero() };
            assert_eq!(*t.b(m), expect, "b_{m} mismatch against series division");
        }
    }

    /// Same oracle idea for x coth x = x cosh x / sinh x.
    #[test]
    fn coth_coefficients_by_series_division() {
        let n = 20;
        let mut fact = vec![BigRational::one(); n + 2];
        for m in 1..=n + 1 {
            fact[m] = fact[m - 1].clone() * big(m as i64);
        }
        // x cosh x = sum_{m even} x^{m+1}/m!; sinh x = sum_{m odd} x^m/m!
        // divide by sinh: write sinh = x * s with s[2k] = 1/(2k+1)!
        let mut numer = vec![BigRational::zero(); n + 1]; // coefficient of x^m in cosh x
        let mut s = vec![BigRational::zero(); n + 1];
        for m in 0..=n {
            if m % 2 == 0 {
                numer[m] = BigRational::one() / fact[m].clone();
                s[m] = BigRational::one() / fact[m + 1].clone();
            }
        }
        let mut q = vec![BigRational::zero(); n + 1];
        for m in 0..=n {
            let mut acc = numer[m].clone();
            for k in 0..m {
                acc -= q[k].clone() * s[m - k].clone();
            }
            q[m] = acc; // s[0] = 1
        }
        let t = bernoulli_coefficients(n).unwrap();
        for m in 0..=n {
            assert_eq!(*t.a(m), q[m], "a_{m} mismatch against series division");
        }
    }

    #[test]
    fn order_cap_enforced() {
        assert!(bernoulli_coefficients(40).is_ok());
        assert!(matches!(bernoulli_coefficients(41), Err(SwError::OrderTooLarge { .. })));
    }
}
