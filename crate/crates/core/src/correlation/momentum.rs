use serde::{Serialize, Serializer};

use crate::decay::{delta_acc_hat, instance_accuracy, seed_view, ViewMode};
use crate::error::Result;
use crate::store::PredictionTensor;

pub const BUCKETS: usize = 10;

fn undefined_marker<S: Serializer>(r: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(v) => s.serialize_f64(*v),
        None => s.serialize_str("undefined"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumBucket {
    /// Upper edge `t`; the bucket holds accuracies in `(t - 0.1, t]`.
    pub upper: f64,
    pub count: usize,
    #[serde(serialize_with = "undefined_marker")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumTable {
    pub s1: String,
    pub s2: String,
    pub s3: String,
    pub mode: ViewMode,
    pub buckets: Vec<MomentumBucket>,
    #[serde(serialize_with = "undefined_marker")]
    pub unconditional_r: Option<f64>,
}

impl MomentumTable {
    /// One row of correlations and one of counts, bucket edges as columns.
    pub fn to_csv(&self) -> String {
        let fmt_r = |r: Option<f64>| r.map_or_else(|| "undefined".to_string(), |v| v.to_string());
        let triplet = format!("{}/{}/{}", self.s1, self.s2, self.s3);
        let mut out = String::from("triplet,statistic");
        for b in &self.buckets {
            out.push_str(&format!(",{:.1}", b.upper));
        }
        out.push_str(",unconditional\n");
        out.push_str(&format!("{triplet},r"));
        for b in &self.buckets {
            out.push(',');
            out.push_str(&fmt_r(b.r));
        }
        out.push_str(&format!(",{}\n", fmt_r(self.unconditional_r)));
        out.push_str(&format!("{triplet},count"));
        for b in &self.buckets {
            out.push_str(&format!(",{}", b.count));
        }
        out.push_str(&format!(",{}\n", self.buckets.iter().map(|b| b.count).sum::<usize>()));
        out
    }
}

/// Pearson correlation, or `None` for fewer than two points or a constant
/// coordinate.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 || x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Bucket of an accuracy `numerator / denominator`, exact for integer counts.
pub fn bucket_of_count(numerator: u64, denominator: u64) -> usize {
    let ceil = (10 * numerator).div_ceil(denominator) as usize;
    ceil.saturating_sub(1).min(BUCKETS - 1)
}

/// Bucket of a real-valued accuracy, treating values within 1e-9 of an edge
/// as on the edge.
pub fn bucket_of(acc: f64) -> usize {
    let x = acc * 10.0;
    let nearest = x.round();
    let ceil = if (x - nearest).abs() < 1e-9 { nearest } else { x.ceil() };
    (ceil as i64 - 1).clamp(0, BUCKETS as i64 - 1) as usize
}

/// Correlation of the `s1 -> s2` and `s2 -> s3` instance differences within
/// buckets of the middle size's estimated accuracy.
pub fn momentum(tensor: &PredictionTensor, s1: &str, s2: &str, s3: &str, mode: ViewMode) -> Result<MomentumTable> {
    for s in [s1, s2, s3] {
        tensor.size_index(s)?;
    }
    let (v1, v2, v3) = (seed_view(tensor, s1, mode)?, seed_view(tensor, s2, mode)?, seed_view(tensor, s3, mode)?);
    let d12 = delta_acc_hat(&v1, &v2)?.to_f64();
    let d23 = delta_acc_hat(&v2, &v3)?.to_f64();
    let mid = instance_accuracy(&v2);
    let buckets: Vec<usize> = match &mid.counts {
        Some(counts) => counts.iter().map(|&c| bucket_of_count(c as u64, mid.slices as u64)).collect(),
        None => mid.values.iter().map(|&a| bucket_of(a)).collect(),
    };
    Ok(momentum_from_parts(s1, s2, s3, mode, &d12, &d23, &buckets))
}

/// Table from precomputed differences and bucket assignments.
pub fn momentum_from_parts(
    s1: &str,
    s2: &str,
    s3: &str,
    mode: ViewMode,
    d12: &[f64],
    d23: &[f64],
    buckets: &[usize],
) -> MomentumTable {
    let mut xs = vec![Vec::new(); BUCKETS];
    let mut ys = vec![Vec::new(); BUCKETS];
    for ((&b, &x), &y) in buckets.iter().zip(d12).zip(d23) {
        xs[b].push(x);
        ys[b].push(y);
    }
    let buckets = (0..BUCKETS)
        .map(|b| MomentumBucket {
            upper: (b + 1) as f64 / 10.0,
            count: xs[b].len(),
            r: pearson(&xs[b], &ys[b]),
        })
        .collect();
    MomentumTable {
        s1: s1.into(),
        s2: s2.into(),
        s3: s3.into(),
        mode,
        buckets,
        unconditional_r: pearson(d12, d23),
    }
}
