//! Upward bias of the adaptively chosen threshold, estimated by resampling
//! pretrained models: tune `t*` on one resample, evaluate it on another.

use serde::{Deserialize, Serialize};

use crate::decay::estimate::SplitSpec;
use crate::decay::pipeline::{analyze_views, paired_views, ViewMode};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rng::CounterRng;
use crate::store::{PredictionTensor, Provenance, SeedView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReplicate {
    /// Best achievable difference on the fresh resample.
    pub l_star: f64,
    /// Difference on the fresh resample at the threshold tuned on the dev resample.
    pub l: f64,
    pub t_star_dev: f64,
    /// The fresh resample's difference curve is identically zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapBiasReport {
    pub s1: String,
    pub s2: String,
    pub replicates: usize,
    pub rng_seed: u64,
    pub slices_per_size: usize,
    pub per_replicate: Vec<BootstrapReplicate>,
    pub mean_l_star: f64,
    pub mean_l: f64,
    /// `(mean L* - mean L) / mean L`; zero when both are zero, `None` when
    /// only the denominator is.
    pub relative_bias: Option<f64>,
    pub degenerate_replicates: usize,
}

fn resample(view: &SeedView, rng: &mut CounterRng) -> SeedView {
    let n = view.slice_count();
    let idx: Vec<usize> = (0..n).map(|_| rng.below(n as u64) as usize).collect();
    view.select(&idx, Provenance::Resampled)
}

pub fn bootstrap_threshold_bias(
    tensor: &PredictionTensor,
    s1: &str,
    s2: &str,
    replicates: usize,
    rng_seed: u64,
    exec: Execution,
) -> Result<BootstrapBiasReport> {
    if replicates < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replicates, got {replicates}")));
    }
    let (v1, v2) = paired_views(tensor, s1, s2, ViewMode::RigorousEnsemble)?;
    let slices = v1.slice_count();
    let split = [SplitSpec::canonical(slices)];
    let root = CounterRng::new(rng_seed);

    let per_replicate = par::try_map_range(exec, replicates, |r| -> Result<BootstrapReplicate> {
        let rep = root.fork(r as u64);
        let draw = |sample: u64| {
            let mut rng1 = rep.fork(sample).fork(1);
            let mut rng2 = rep.fork(sample).fork(2);
            (resample(&v1, &mut rng1), resample(&v2, &mut rng2))
        };
        let (dev1, dev2) = draw(0);
        let (fresh1, fresh2) = draw(1);
        let (_, dev) = analyze_views(&dev1, &dev2, &split)?;
        let (_, fresh) = analyze_views(&fresh1, &fresh2, &split)?;
        Ok(BootstrapReplicate {
            l_star: fresh.lower_bound,
            l: fresh.diff[dev.best_index],
            t_star_dev: dev.t_star,
            degenerate: fresh.diff.iter().all(|&d| d == 0.0),
        })
    })?;

    let l_stars: Vec<f64> = per_replicate.iter().map(|r| r.l_star).collect();
    let ls: Vec<f64> = per_replicate.iter().map(|r| r.l).collect();
    let mean_l_star = par::pairwise_sum(&l_stars) / replicates as f64;
    let mean_l = par::pairwise_sum(&ls) / replicates as f64;
    let gap = mean_l_star - mean_l;
    let relative_bias = if mean_l != 0.0 {
        Some(gap / mean_l)
    } else if gap == 0.0 {
        Some(0.0)
    } else {
        None
    };
    let degenerate_replicates = per_replicate.iter().filter(|r| r.degenerate).count();
    Ok(BootstrapBiasReport {
        s1: s1.to_string(),
        s2: s2.to_string(),
        replicates,
        rng_seed,
        slices_per_size: slices,
        per_replicate,
        mean_l_star,
        mean_l,
        relative_bias,
        degenerate_replicates,
    })
}
