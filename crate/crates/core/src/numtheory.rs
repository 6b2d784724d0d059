//! Base-`2^d` digit machinery behind the ground-state energy formulas.

use num_rational::Ratio;

use crate::{check_dim, Result};

/// Digits of a non-negative integer in base `2^d`, least significant first.
///
/// Zero has an empty digit list; otherwise the last digit is non-zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitVector {
    digits: Vec<u64>,
    d: u32,
}

impl DigitVector {
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn base(&self) -> u64 {
        1u64 << self.d
    }

    /// Reconstructs the represented value, `None` on `u128` overflow.
    pub fn value(&self) -> Option<u128> {
        let base = self.base() as u128;
        self.digits
            .iter()
            .rev()
            .try_fold(0u128, |acc, &c| acc.checked_mul(base)?.checked_add(c as u128))
    }
}

/// The dimension constant `C_d = (2^{d-1} - 2) / (3 * 2^{d-2})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimConstant {
    pub d: u32,
    pub c: Ratio<i64>,
}

impl DimConstant {
    pub fn new(d: u32) -> Result<Self> {
        check_dim(d)?;
        let num = (1i64 << (d - 1)) - 2;
        let den = 3 * (1i64 << (d - 2));
        Ok(Self {
            d,
            c: Ratio::new(num, den),
        })
    }

    /// Numerator and denominator of `C_d` before reduction. Keeping the
    /// unreduced pair lets integer formulas use a single fixed denominator.
    pub(crate) fn raw(d: u32) -> (i128, i128) {
        (((1i128) << (d - 1)) - 2, 3 * (1i128 << (d - 2)))
    }

    pub fn as_f64(&self) -> f64 {
        *self.c.numer() as f64 / *self.c.denom() as f64
    }
}

pub fn digits_base(n: u64, d: u32) -> Result<DigitVector> {
    check_dim(d)?;
    let mut digits = Vec::new();
    let mut rest = n;
    let mask = (1u64 << d) - 1;
    while rest > 0 {
        digits.push(rest & mask);
        rest >>= d;
    }
    Ok(DigitVector { digits, d })
}

/// `gamma(n) = sum_i c_i 2^{i(d-2)}` over the base-`2^d` digits of `n`.
pub fn gamma(n: u64, d: u32) -> Result<u64> {
    check_dim(d)?;
    Ok(gamma_unchecked(n, d))
}

#[inline]
pub(crate) fn gamma_unchecked(n: u64, d: u32) -> u64 {
    let mask = (1u64 << d) - 1;
    let mut rest = n;
    let mut shift = 0u32;
    let mut acc = 0u64;
    while rest > 0 {
        acc += (rest & mask) << shift;
        rest >>= d;
        shift += d - 2;
    }
    acc
}

/// `sum_{m=0}^{n-1} gamma(m)`, by counting digit sums position by position.
pub(crate) fn gamma_prefix_sum(n: u64, d: u32) -> u128 {
    let base = 1u128 << d;
    let n = n as u128;
    let mut total = 0u128;
    let mut place = 1u128; // base^i
    let mut weight = 1u128; // 2^{i(d-2)}
    while place < n.max(1) {
        let cycle = place * base;
        let full = n / cycle;
        let rem = n % cycle;
        let mut digit_sum = full * place * (base * (base - 1) / 2);
        let top = rem / place;
        digit_sum += place * (top * top.saturating_sub(1) / 2) + (rem % place) * top;
        total += digit_sum * weight;
        place = cycle;
        weight <<= d - 2;
    }
    total
}

/// Base level `h_n`: smallest `h` with `2^{dh} >= n`, by integer comparison.
pub fn base_level(n: u64, d: u32) -> u32 {
    let mut h = 0u32;
    let mut cap: u128 = 1;
    while cap < n as u128 {
        cap <<= d;
        h += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn digit_examples() {
        assert_eq!(digits_base(9, 3).unwrap().digits(), &[1, 1]);
        assert_eq!(digits_base(8, 3).unwrap().digits(), &[0, 1]);
        assert!(digits_base(0, 3).unwrap().digits().is_empty());
        assert!(matches!(digits_base(5, 2), Err(crate::Error::InvalidDimension(2))));
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(8, 3).unwrap(), 2);
        assert_eq!(gamma(9, 3).unwrap(), 3);
        assert_eq!(gamma(7, 3).unwrap(), 7);
        assert_eq!(gamma(0, 3).unwrap(), 0);
    }

    #[test]
    fn base_level_examples() {
        assert_eq!(base_level(0, 3), 0);
        assert_eq!(base_level(1, 3), 0);
        assert_eq!(base_level(8, 3), 1);
        assert_eq!(base_level(9, 3), 2);
        assert_eq!(base_level(64, 3), 2);
        assert_eq!(base_level(65, 3), 3);
        assert_eq!(base_level(u64::MAX, 16), 4);
    }

    #[test]
    fn dim_constant() {
        assert_eq!(DimConstant::new(3).unwrap().c, Ratio::new(1, 3));
        assert_eq!(DimConstant::new(4).unwrap().c, Ratio::new(1, 2));
        assert!(DimConstant::new(17).is_err());
    }

    #[test]
    fn prefix_sum_matches_direct() {
        for d in 3..=5 {
            let mut acc = 0u128;
            for n in 0..5000u64 {
                assert_eq!(gamma_prefix_sum(n, d), acc, "n={n} d={d}");
                acc += gamma_unchecked(n, d) as u128;
            }
        }
    }

    #[test]
    fn single_step_bound_exhaustive_small() {
        for d in 3..=5 {
            for m in 0..200_000u64 {
                assert!(gamma_unchecked(m + 1, d) <= gamma_unchecked(m, d) + 1);
            }
        }
    }

    proptest! {
        #[test]
        fn digits_round_trip(n in any::<u64>(), d in 3u32..=16) {
            let v = digits_base(n, d).unwrap();
            prop_assert_eq!(v.value(), Some(n as u128));
            prop_assert!(v.digits().iter().all(|&c| c < v.base()));
            prop_assert!(v.digits().last().map_or(true, |&c| c > 0));
        }

        #[test]
        fn gamma_subadditive(n in 0u64..1_000_000, r in 0u64..1_000_000, d in 3u32..=5) {
            prop_assert!(gamma_unchecked(n + r, d) <= gamma_unchecked(n, d) + gamma_unchecked(r, d));
        }

        #[test]
        fn base_level_is_minimal(n in 1u64..u64::MAX, d in 3u32..=8) {
            let h = base_level(n, d);
            prop_assert!((1u128 << (d * h)) >= n as u128);
            if h > 0 {
                prop_assert!((1u128 << (d * (h - 1))) < n as u128);
            }
        }
    }
}
