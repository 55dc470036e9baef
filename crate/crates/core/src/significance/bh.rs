use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub upper: f64,
    pub count: usize,
}

/// Benjamini-Hochberg lower bound `p (1 - q)` on the decaying fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BHResult {
    pub q: f64,
    /// Largest fraction `r / N` with `alpha_(r) < (r / N) q`.
    pub p: f64,
    pub lower_bound: f64,
    pub discoveries: usize,
    pub tests: usize,
    pub min_alpha: f64,
    pub alpha_histogram: Vec<HistogramBin>,
    #[serde(skip)]
    pub sorted_alphas: Vec<f64>,
}

pub const HISTOGRAM_BINS: usize = 20;

fn histogram(sorted: &[f64]) -> Vec<HistogramBin> {
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &a in sorted {
        let bin = ((a * HISTOGRAM_BINS as f64).ceil() as usize).clamp(1, HISTOGRAM_BINS) - 1;
        counts[bin] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HistogramBin {
            upper: (b + 1) as f64 / HISTOGRAM_BINS as f64,
            count,
        })
        .collect()
}

fn validate(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("no significance levels".into()));
    }
    if let Some(bad) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::InvalidArgument(format!("significance level {bad} outside (0, 1]")));
    }
    Ok(())
}

fn validate_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("rate q = {q} outside (0, 1)")));
    }
    Ok(())
}

fn step_up(sorted: &[f64], q: f64) -> usize {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .rev()
        .find(|(r, &a)| a < (*r + 1) as f64 / n * q)
        .map(|(r, _)| r + 1)
        .unwrap_or(0)
}

fn result(sorted: Vec<f64>, q: f64, discoveries: usize) -> BHResult {
    let tests = sorted.len();
    let p = discoveries as f64 / tests as f64;
    BHResult {
        q,
        p,
        lower_bound: p * (1.0 - q),
        discoveries,
        tests,
        min_alpha: sorted[0],
        alpha_histogram: histogram(&sorted),
        sorted_alphas: sorted,
    }
}

fn sorted(alphas: &[f64]) -> Vec<f64> {
    let mut s = alphas.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn bh_lower_bound(alphas: &[f64], q: f64) -> Result<BHResult> {
    validate(alphas)?;
    validate_q(q)?;
    let s = sorted(alphas);
    let r = step_up(&s, q);
    Ok(result(s, q, r))
}

/// `0.01, 0.02, ..., 0.99`.
pub fn default_q_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// BH at the rate in `q_grid` maximising the lower bound; ties go to the
/// smaller rate.
pub fn bh_adaptive(alphas: &[f64], q_grid: &[f64]) -> Result<BHResult> {
    validate(alphas)?;
    if q_grid.is_empty() {
        return Err(Error::InvalidArgument("empty q grid".into()));
    }
    for &q in q_grid {
        validate_q(q)?;
    }
    let s = sorted(alphas);
    let n = s.len() as f64;
    let mut best: Option<(f64, f64, usize)> = None;
    for &q in q_grid {
        let r = step_up(&s, q);
        let bound = r as f64 / n * (1.0 - q);
        let better = match best {
            None => true,
            Some((bq, bb, _)) => bound > bb || (bound == bb && q < bq),
        };
        if better {
            best = Some((q, bound, r));
        }
    }
    let (q, _, r) = best.expect("non-empty grid");
    Ok(result(s, q, r))
}
