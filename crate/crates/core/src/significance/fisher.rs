use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correct counts `a` of `n1` slices for the smaller size and `b` of `n2`
/// for the larger one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub n1: u64,
    pub b: u64,
    pub n2: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, n1: u64, b: u64, n2: u64) -> Result<Self> {
        if n1 == 0 || n2 == 0 || a > n1 || b > n2 {
            return Err(Error::InvalidArgument(format!(
                "invalid table a={a}/{n1}, b={b}/{n2}"
            )));
        }
        Ok(ContingencyTable { a, n1, b, n2 })
    }
}

const TABLE_LEN: usize = 1024;

fn small_ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..TABLE_LEN {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`: tabulated below 1024, Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return small_ln_factorials()[n as usize];
    }
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ln Gamma(x) asymptotic series
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Tables up to this many slices are evaluated with exact integer counts.
const EXACT_LIMIT: u64 = 100;

fn choose(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (1..=k as u128).fold(1u128, |c, j| c * (n as u128 + 1 - j) / j)
}

/// One-sided Fisher exact test against "the larger model is at least as
/// accurate": the probability, given both margins, that the smaller model
/// gets at least `a` of the `a + b` correct predictions.
pub fn fisher_one_sided(table: ContingencyTable) -> f64 {
    let ContingencyTable { a, n1, b, n2 } = table;
    let total = n1 + n2;
    let correct = a + b;
    let lo = n1.saturating_sub(total - correct);
    let hi = n1.min(correct);
    if a <= lo {
        return 1.0;
    }
    if total <= EXACT_LIMIT {
        let tail: u128 = (a..=hi).map(|x| choose(correct, x) * choose(total - correct, n1 - x)).sum();
        return tail as f64 / choose(total, n1) as f64;
    }
    // first term in log space, the rest by exact term ratios
    let ln_first = ln_choose(correct, a) + ln_choose(total - correct, n1 - a) - ln_choose(total, n1);
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for x in a..hi {
        let num = (correct - x) as f64 * (n1 - x) as f64;
        let den = (x + 1) as f64 * (total - correct + x + 1 - n1) as f64;
        term *= num / den;
        sum += term;
    }
    (ln_first.exp() * sum).min(1.0)
}
