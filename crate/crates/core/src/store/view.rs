use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::tensor::{PredictionTensor, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FlattenAllRuns,
    EnsemblePerPretrain,
    /// One half of a size's slices, used for self-comparison.
    DisjointHalf,
    Resampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointPolicy {
    #[default]
    Last,
    All,
}

/// Independent per-seed slices of one size; each slice is a per-instance
/// value vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedView {
    pub size: String,
    pub provenance: Provenance,
    pub slices: Vec<Vec<f64>>,
    /// Every value is exactly 0 or 1.
    pub binary: bool,
}

impl SeedView {
    pub fn new(size: impl Into<String>, provenance: Provenance, slices: Vec<Vec<f64>>) -> Result<Self> {
        let size = size.into();
        if slices.is_empty() {
            return Err(Error::InvalidArgument(format!("seed view of {size} has no slices")));
        }
        let n = slices[0].len();
        if slices.iter().any(|s| s.len() != n) {
            return Err(Error::InvalidArgument(format!("ragged slices in seed view of {size}")));
        }
        let mut binary = true;
        for &v in slices.iter().flatten() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ValueOutOfRange {
                    value: v,
                    location: format!("seed view of {size}"),
                });
            }
            binary &= v == 0.0 || v == 1.0;
        }
        Ok(SeedView {
            size,
            provenance,
            slices,
            binary,
        })
    }

    pub fn slice_count(&self) -> usize {
        self.slices.len()
    }

    pub fn instances(&self) -> usize {
        self.slices[0].len()
    }

    /// Keep only the slices at `indices` (with repetition allowed).
    pub fn select(&self, indices: &[usize], provenance: Provenance) -> SeedView {
        SeedView {
            size: self.size.clone(),
            provenance,
            slices: indices.iter().map(|&j| self.slices[j].clone()).collect(),
            binary: self.binary,
        }
    }

    /// Drop the last slice when the count is odd.
    pub fn truncate_even(mut self) -> SeedView {
        if self.slices.len() % 2 == 1 && self.slices.len() > 1 {
            log::warn!(
                "size {}: {} slices is odd, dropping the last one",
                self.size,
                self.slices.len()
            );
            self.slices.pop();
        }
        self
    }

    /// Split into first and second half (a trailing odd slice goes unused).
    pub fn disjoint_halves(&self) -> Result<(SeedView, SeedView)> {
        let half = self.slices.len() / 2;
        if half == 0 {
            return Err(Error::TooFewRuns(self.slices.len()));
        }
        let first: Vec<usize> = (0..half).collect();
        let second: Vec<usize> = (half..2 * half).collect();
        Ok((
            self.select(&first, Provenance::DisjointHalf),
            self.select(&second, Provenance::DisjointHalf),
        ))
    }
}

fn checkpoint_range(tensor: &PredictionTensor, policy: CheckpointPolicy) -> std::ops::Range<usize> {
    match policy {
        CheckpointPolicy::Last => tensor.checkpoints() - 1..tensor.checkpoints(),
        CheckpointPolicy::All => 0..tensor.checkpoints(),
    }
}

/// One slice per pretraining seed. Correctness bits are combined by strict
/// majority vote over the pooled finetune (and checkpoint) runs, ties
/// counting as incorrect; probabilities are averaged.
pub fn ensemble_per_pretrain(
    tensor: &PredictionTensor,
    size: &str,
    checkpoints: CheckpointPolicy,
) -> Result<SeedView> {
    let s = tensor.size_index(size)?;
    let n = tensor.instances();
    let ckpts = checkpoint_range(tensor, checkpoints);
    let pooled = (tensor.finetune_seeds() * ckpts.len()) as f64;
    let mut slices = Vec::with_capacity(tensor.pretrain_seeds(s));
    for p in 0..tensor.pretrain_seeds(s) {
        let mut sums = vec![0.0; n];
        for f in 0..tensor.finetune_seeds() {
            for e in ckpts.clone() {
                for (acc, &v) in sums.iter_mut().zip(tensor.run(s, p, f, e)) {
                    *acc += v;
                }
            }
        }
        let slice = match tensor.value_kind() {
            ValueKind::Correctness => sums
                .into_iter()
                .map(|ones| if 2.0 * ones > pooled { 1.0 } else { 0.0 })
                .collect(),
            ValueKind::Probability => sums.into_iter().map(|x| x / pooled).collect(),
        };
        slices.push(slice);
    }
    SeedView::new(size, Provenance::EnsemblePerPretrain, slices)
}

/// Every run as its own slice, ordered lexicographically by `(p, f, e)`.
pub fn flatten_runs(
    tensor: &PredictionTensor,
    size: &str,
    checkpoints: CheckpointPolicy,
) -> Result<SeedView> {
    let s = tensor.size_index(size)?;
    let ckpts = checkpoint_range(tensor, checkpoints);
    let mut slices = Vec::new();
    for p in 0..tensor.pretrain_seeds(s) {
        for f in 0..tensor.finetune_seeds() {
            for e in ckpts.clone() {
                slices.push(tensor.run(s, p, f, e).to_vec());
            }
        }
    }
    SeedView::new(size, Provenance::FlattenAllRuns, slices)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_instance(bits: &[f64], finetune: usize, pretrain: usize) -> PredictionTensor {
        PredictionTensor::new(
            ValueKind::Correctness,
            vec!["x".into()],
            finetune,
            bits.len() / (finetune * pretrain),
            vec![("s".into(), pretrain, bits.to_vec())],
        )
        .unwrap()
    }

    #[test]
    fn majority_vote_rules() {
        let vote = |bits: &[f64]| {
            let t = single_instance(bits, bits.len(), 1);
            ensemble_per_pretrain(&t, "s", CheckpointPolicy::All).unwrap().slices[0][0]
        };
        assert_eq!(vote(&[1.0, 1.0, 1.0, 0.0, 0.0]), 1.0);
        assert_eq!(vote(&[1.0, 0.0, 0.0, 0.0, 0.0]), 0.0);
        assert_eq!(vote(&[1.0, 1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn probabilities_ensemble_by_mean() {
        let t = PredictionTensor::new(
            ValueKind::Probability,
            vec!["x".into()],
            4,
            1,
            vec![("s".into(), 1, vec![0.5, 0.25, 1.0, 0.25])],
        )
        .unwrap();
        let v = ensemble_per_pretrain(&t, "s", CheckpointPolicy::Last).unwrap();
        assert_eq!(v.slices, vec![vec![0.5]]);
        assert!(!v.binary);
    }

    #[test]
    fn flatten_order_is_lexicographic() {
        // P=2, F=3; value = 10p + f over a single instance, scaled into [0,1]
        let bits: Vec<f64> = (0..2)
            .flat_map(|p| (0..3).map(move |f| (10 * p + f) as f64 / 100.0))
            .collect();
        let t = PredictionTensor::new(
            ValueKind::Probability,
            vec!["x".into()],
            3,
            1,
            vec![("s".into(), 2, bits)],
        )
        .unwrap();
        let v = flatten_runs(&t, "s", CheckpointPolicy::Last).unwrap();
        let got: Vec<f64> = v.slices.iter().map(|s| s[0]).collect();
        assert_eq!(got, vec![0.0, 0.01, 0.02, 0.10, 0.11, 0.12]);
    }

    #[test]
    fn flatten_single_run_is_identity() {
        let t = single_instance(&[1.0], 1, 1);
        let v = flatten_runs(&t, "s", CheckpointPolicy::Last).unwrap();
        assert_eq!(v.slices, vec![vec![1.0]]);
    }

    #[test]
    fn checkpoint_policy_counts() {
        // P=1, F=2, E=3
        let t = single_instance(&[0.0, 0.0, 1.0, 1.0, 1.0, 0.0], 2, 1);
        assert_eq!(flatten_runs(&t, "s", CheckpointPolicy::Last).unwrap().slices, vec![vec![1.0], vec![0.0]]);
        assert_eq!(flatten_runs(&t, "s", CheckpointPolicy::All).unwrap().slice_count(), 6);
        // 3 of 6 bits: a tie, so the vote is 0
        assert_eq!(ensemble_per_pretrain(&t, "s", CheckpointPolicy::All).unwrap().slices[0][0], 0.0);
    }

    #[test]
    fn halves_and_truncation() {
        let v = SeedView::new("s", Provenance::FlattenAllRuns, vec![vec![0.0]; 5]).unwrap();
        let (a, b) = v.disjoint_halves().unwrap();
        assert_eq!((a.slice_count(), b.slice_count()), (2, 2));
        assert_eq!(v.truncate_even().slice_count(), 4);
    }

    #[test]
    fn unknown_size() {
        let t = single_instance(&[1.0], 1, 1);
        assert!(matches!(
            flatten_runs(&t, "nope", CheckpointPolicy::Last),
            Err(Error::UnknownSize(_))
        ));
    }
}
