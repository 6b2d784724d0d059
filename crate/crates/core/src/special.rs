//! Log-factorials and log-sum-exp helpers.

use std::sync::OnceLock;

const EXACT_FACTORIAL_LIMIT: usize = 10_000;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(EXACT_FACTORIAL_LIMIT + 1);
        t.push(0.0);
        let mut acc = 0.0f64;
        for k in 1..=EXACT_FACTORIAL_LIMIT {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln n!`: summed logs up to 10^4, log-gamma beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) <= EXACT_FACTORIAL_LIMIT {
        table()[n as usize]
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// Natural log of a big integer from its top 64 bits.
pub fn ln_biguint(x: &num_bigint::BigUint) -> f64 {
    use num_traits::ToPrimitive;
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}
