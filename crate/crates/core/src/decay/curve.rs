use serde::{Deserialize, Serialize};

use crate::decay::estimate::DeltaAccEstimate;
use crate::error::{Error, Result};

/// Discovery and false-discovery CDFs over the achievable thresholds
/// `-1, -1 + 1/d, ..., 0` of the `1/d` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub s1: String,
    pub s2: String,
    pub denominator: u64,
    pub instances: usize,
    /// Baseline splits averaged into `decay_prime`.
    pub splits: usize,
    pub thresholds: Vec<f64>,
    pub decay_hat: Vec<f64>,
    pub decay_prime: Vec<f64>,
    pub diff: Vec<f64>,
    /// Index of the first threshold attaining the maximum difference.
    pub best_index: usize,
    pub t_star: f64,
    pub lower_bound: f64,
}

impl DecayCurve {
    /// Numerator of threshold `index` over `denominator`.
    pub fn threshold_numerator(&self, index: usize) -> i64 {
        index as i64 - self.denominator as i64
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.thresholds.iter().position(|&x| x == t)
    }

    /// Table rows `threshold,decay_hat,decay_prime,diff`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,decay_hat,decay_prime,diff\n");
        for j in 0..self.thresholds.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.thresholds[j], self.decay_hat[j], self.decay_prime[j], self.diff[j]
            ));
        }
        out
    }
}

/// Counts of values `<= j` for each `j` in `-den..=0`.
fn cdf_counts(den: u64, numerators: &[i64]) -> Vec<u64> {
    let den = den as i64;
    let mut hist = vec![0u64; den as usize + 1];
    for &v in numerators {
        if v <= 0 {
            // valid estimates satisfy v >= -den
            let idx = (v.max(-den) + den) as usize;
            hist[idx] += 1;
        }
    }
    let mut running = 0;
    hist.iter()
        .map(|&h| {
            running += h;
            running
        })
        .collect()
}

fn exact_parts(est: &DeltaAccEstimate) -> Result<(u64, &[i64])> {
    est.exact().ok_or(Error::RequiresCorrectness("real-valued"))
}

pub fn decay_curve(observed: &DeltaAccEstimate, baseline: &DeltaAccEstimate) -> Result<DecayCurve> {
    decay_curve_averaged(observed, std::slice::from_ref(baseline))
}

/// Decay curve with `decay_prime` averaged over several baseline splits.
pub fn decay_curve_averaged(observed: &DeltaAccEstimate, baselines: &[DeltaAccEstimate]) -> Result<DecayCurve> {
    if baselines.is_empty() {
        return Err(Error::InvalidArgument("no baseline estimates".into()));
    }
    let (den, obs) = exact_parts(observed)?;
    let n = obs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no instances".into()));
    }
    let hat_counts = cdf_counts(den, obs);
    let mut prime_counts = vec![0u64; hat_counts.len()];
    for b in baselines {
        let (bden, bvals) = exact_parts(b)?;
        if bden != den {
            return Err(Error::GridMismatch {
                observed: den,
                baseline: bden,
            });
        }
        if bvals.len() != n {
            return Err(Error::InstanceMismatch {
                left: n,
                right: bvals.len(),
            });
        }
        for (acc, c) in prime_counts.iter_mut().zip(cdf_counts(den, bvals)) {
            *acc += c;
        }
    }
    let nf = n as f64;
    let splits = baselines.len() as f64;
    let thresholds: Vec<f64> = (0..=den).map(|j| (j as i64 - den as i64) as f64 / den as f64).collect();
    let decay_hat: Vec<f64> = hat_counts.iter().map(|&c| c as f64 / nf).collect();
    let decay_prime: Vec<f64> = prime_counts
        .iter()
        .map(|&c| if baselines.len() == 1 { c as f64 / nf } else { c as f64 / splits / nf })
        .collect();
    let diff: Vec<f64> = decay_hat.iter().zip(&decay_prime).map(|(h, p)| h - p).collect();
    let mut best_index = 0;
    for (j, &d) in diff.iter().enumerate() {
        if d > diff[best_index] {
            best_index = j;
        }
    }
    Ok(DecayCurve {
        s1: observed.s1.clone(),
        s2: observed.s2.clone(),
        denominator: den,
        instances: n,
        splits: baselines.len(),
        t_star: thresholds[best_index],
        lower_bound: diff[best_index],
        thresholds,
        decay_hat,
        decay_prime,
        diff,
        best_index,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayingInstance {
    pub id: String,
    pub delta: f64,
}

/// Instances with difference `<= t`, sorted by difference then identifier.
pub fn export_decaying_instances(
    observed: &DeltaAccEstimate,
    t: f64,
    ids: &[String],
) -> Result<Vec<DecayingInstance>> {
    if ids.len() != observed.len() {
        return Err(Error::InstanceMismatch {
            left: observed.len(),
            right: ids.len(),
        });
    }
    let mut out: Vec<(f64, i64, &String)> = match observed.exact() {
        // nothing lies below the grid, on it or not
        Some(_) if t < -1.0 => Vec::new(),
        Some((den, nums)) => {
            let scaled = t * den as f64;
            let j = scaled.round();
            if (scaled - j).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("threshold {t} is not on the 1/{den} grid")));
            }
            let j = j as i64;
            nums.iter()
                .zip(ids)
                .filter(|(&v, _)| v <= j)
                .map(|(&v, id)| (v as f64 / den as f64, v, id))
                .collect()
        }
        None => (0..observed.len())
            .filter(|&i| observed.value(i) <= t)
            .map(|i| (observed.value(i), 0, &ids[i]))
            .collect(),
    };
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.2.cmp(b.2)));
    Ok(out
        .into_iter()
        .map(|(delta, _, id)| DecayingInstance { id: id.clone(), delta })
        .collect())
}
