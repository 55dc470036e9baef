use serde::{Deserialize, Serialize};

use crate::decay::curve::{decay_curve_averaged, DecayCurve};
use crate::decay::estimate::{delta_acc_hat, mixing_baseline, DeltaAccEstimate, SplitSpec};
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::store::{ensemble_per_pretrain, flatten_runs, CheckpointPolicy, PredictionTensor, SeedView, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewMode {
    /// Every finetuning run treated as an independent seed.
    NaiveFlatten,
    /// One majority-vote ensemble per pretraining seed.
    RigorousEnsemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    Canonical,
    /// Average `decay_prime` over `count` seeded random splits.
    Random { count: usize, seed: u64 },
}

impl SplitPolicy {
    pub fn splits(&self, slices_per_size: usize) -> Vec<SplitSpec> {
        match *self {
            SplitPolicy::Canonical => vec![SplitSpec::canonical(slices_per_size)],
            SplitPolicy::Random { count, seed } => {
                let root = CounterRng::new(seed);
                (0..count as u64)
                    .map(|r| {
                        let pick = |label: u64| {
                            let mut rng = root.fork(r).fork(label);
                            let mut idx: Vec<usize> = (0..slices_per_size).collect();
                            rng.shuffle(&mut idx);
                            let mut a = idx[..slices_per_size / 2].to_vec();
                            a.sort_unstable();
                            a
                        };
                        SplitSpec {
                            group_a1: pick(1),
                            group_a2: pick(2),
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Build one view for the given mode, using the last checkpoint.
pub fn seed_view(tensor: &PredictionTensor, size: &str, mode: ViewMode) -> Result<SeedView> {
    match mode {
        ViewMode::NaiveFlatten => flatten_runs(tensor, size, CheckpointPolicy::Last),
        ViewMode::RigorousEnsemble => {
            if tensor.value_kind() != ValueKind::Correctness {
                return Err(Error::RequiresCorrectness(tensor.value_kind().name()));
            }
            ensemble_per_pretrain(tensor, size, CheckpointPolicy::Last)
        }
    }
}

/// Paired views with equal, even slice counts. Comparing a size with itself
/// uses its two disjoint halves.
pub fn paired_views(tensor: &PredictionTensor, s1: &str, s2: &str, mode: ViewMode) -> Result<(SeedView, SeedView)> {
    let (v1, v2) = if s1 == s2 {
        log::warn!("comparing size {s1} with itself: disjoint seed halves, a null comparison");
        seed_view(tensor, s1, mode)?.disjoint_halves()?
    } else {
        (seed_view(tensor, s1, mode)?, seed_view(tensor, s2, mode)?)
    };
    let (v1, v2) = (v1.truncate_even(), v2.truncate_even());
    if v1.slice_count() != v2.slice_count() {
        return Err(Error::SliceCountMismatch {
            left: v1.slice_count(),
            right: v2.slice_count(),
        });
    }
    if v1.slice_count() < 2 {
        return Err(Error::TooFewRuns(v1.slice_count()));
    }
    Ok((v1, v2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayAnalysis {
    pub mode: ViewMode,
    pub slices_per_size: usize,
    pub observed: DeltaAccEstimate,
    pub curve: DecayCurve,
}

/// Observed differences, baselines and curve for a pair of views.
pub fn analyze_views(view1: &SeedView, view2: &SeedView, splits: &[SplitSpec]) -> Result<(DeltaAccEstimate, DecayCurve)> {
    let observed = delta_acc_hat(view1, view2)?;
    let baselines = splits
        .iter()
        .map(|split| mixing_baseline(view1, view2, split))
        .collect::<Result<Vec<_>>>()?;
    let curve = decay_curve_averaged(&observed, &baselines)?;
    Ok((observed, curve))
}

pub fn decay_analysis(
    tensor: &PredictionTensor,
    s1: &str,
    s2: &str,
    mode: ViewMode,
    splits: SplitPolicy,
) -> Result<DecayAnalysis> {
    let (v1, v2) = paired_views(tensor, s1, s2, mode)?;
    let slices_per_size = v1.slice_count();
    let (observed, curve) = analyze_views(&v1, &v2, &splits.splits(slices_per_size))?;
    Ok(DecayAnalysis {
        mode,
        slices_per_size,
        observed,
        curve,
    })
}

pub fn decay_lower_bound(
    tensor: &PredictionTensor,
    s1: &str,
    s2: &str,
    mode: ViewMode,
    splits: SplitPolicy,
) -> Result<DecayCurve> {
    Ok(decay_analysis(tensor, s1, s2, mode, splits)?.curve)
}
