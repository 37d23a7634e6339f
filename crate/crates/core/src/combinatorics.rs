//! Exact integer combinatorics. Everything is computed in `BigUint` and only
//! converted to `f64` by the caller at the point of use.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// `(Σ m_i)! / Π m_i!`.
pub fn multinomial(counts: &[usize]) -> BigUint {
    let mut total = 0usize;
    let mut acc = BigUint::one();
    for &m in counts {
        total += m;
        acc *= binomial(total, m);
    }
    acc
}

/// Lossy conversion; values past `f64::MAX` become infinity.
pub fn to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

pub fn factorial_f64(n: usize) -> f64 {
    to_f64(&factorial(n))
}

pub fn binomial_f64(n: usize, k: usize) -> f64 {
    to_f64(&binomial(n, k))
}

/// Small binomials for index arithmetic. Panics on overflow, which only
/// happens for layouts far beyond anything addressable in memory.
pub(crate) fn binomial_usize(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).expect("binomial overflows usize")
}
