//! Exact distributions of the observed difference and the mixing baseline
//! for a single instance with rates on a tenths grid.

use serde::{Deserialize, Serialize};

/// `P(Bin(n, m/10) = j) * 10^n`, exactly.
pub fn binomial_tenths(n: u32, m: u32) -> Vec<u128> {
    assert!(m <= 10);
    let mut choose = vec![1u128; n as usize + 1];
    for j in 1..=n as usize {
        choose[j] = choose[j - 1] * (n as u128 + 1 - j as u128) / j as u128;
    }
    (0..=n)
        .map(|j| choose[j as usize] * (m as u128).pow(j) * (10 - m as u128).pow(n - j))
        .collect()
}

/// Distribution of a sum of independent variables given as numerator vectors.
pub fn convolve(a: &[u128], b: &[u128]) -> Vec<u128> {
    let mut out = vec![0u128; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Distribution of `X - Y` indexed by `X - Y + (len(Y) - 1)`.
pub fn difference(x: &[u128], y: &[u128]) -> Vec<u128> {
    let reversed: Vec<u128> = y.iter().rev().copied().collect();
    convolve(x, &reversed)
}

fn cumulative(pmf: &[u128]) -> Vec<u128> {
    let mut acc = 0u128;
    pmf.iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub p1_tenths: u32,
    pub p2_tenths: u32,
    pub k: u32,
    /// Every grid point has baseline CDF `>=` observed CDF.
    pub holds: bool,
    /// Smallest `CDF'(t) - CDF_hat(t)` over the grid, as a probability.
    pub min_gap: f64,
    pub grid_points: usize,
}

/// Compare the exact CDFs of `X2 - X1` (each `Bin(2k, p)`) and `A - B`
/// (each the sum of `Bin(k, p1)` and `Bin(k, p2)`), both over `2k`.
pub fn exact_dominance(p1_tenths: u32, p2_tenths: u32, k: u32) -> DominanceCheck {
    let observed = difference(&binomial_tenths(2 * k, p2_tenths), &binomial_tenths(2 * k, p1_tenths));
    let group = convolve(&binomial_tenths(k, p1_tenths), &binomial_tenths(k, p2_tenths));
    let baseline = difference(&group, &group);
    debug_assert_eq!(observed.len(), baseline.len());
    let (co, cb) = (cumulative(&observed), cumulative(&baseline));
    let total = 10f64.powi(4 * k as i32);
    let mut holds = true;
    let mut min_gap = f64::INFINITY;
    for (o, b) in co.iter().zip(&cb) {
        holds &= b >= o;
        min_gap = min_gap.min((*b as f64 - *o as f64) / total);
    }
    DominanceCheck {
        p1_tenths,
        p2_tenths,
        k,
        holds,
        min_gap,
        grid_points: co.len(),
    }
}
