use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    /// 0/1 correctness bits.
    Correctness,
    /// Probability assigned to the gold class.
    Probability,
}

impl ValueKind {
    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Correctness => "correctness",
            ValueKind::Probability => "probability",
        }
    }
}

/// All runs of one model size. Values are dense in `(p, f, e, i)` row-major
/// order, so one run's per-instance vector is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeBlock {
    pub label: String,
    pub pretrain_seed_ids: Vec<i64>,
    pub values: Vec<f64>,
    pub pred_labels: Option<Vec<String>>,
}

/// Prediction tensor indexed by (size, pretrain seed, finetune seed,
/// checkpoint, instance). Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTensor {
    value_kind: ValueKind,
    sizes: Vec<SizeBlock>,
    finetune_seed_ids: Vec<i64>,
    checkpoint_ids: Vec<i64>,
    instance_ids: Vec<String>,
    gold_labels: Option<Vec<String>>,
}

/// Raw parts of a tensor prior to validation.
#[derive(Debug, Clone)]
pub struct TensorParts {
    pub value_kind: ValueKind,
    pub sizes: Vec<SizeBlock>,
    pub finetune_seed_ids: Vec<i64>,
    pub checkpoint_ids: Vec<i64>,
    pub instance_ids: Vec<String>,
    pub gold_labels: Option<Vec<String>>,
}

impl PredictionTensor {
    /// Build a tensor with seed and checkpoint ids `0..n`.
    /// `sizes` holds `(label, pretrain seed count, dense values)`.
    pub fn new(
        value_kind: ValueKind,
        instance_ids: Vec<String>,
        finetune_seeds: usize,
        checkpoints: usize,
        sizes: Vec<(String, usize, Vec<f64>)>,
    ) -> Result<Self> {
        let sizes = sizes
            .into_iter()
            .map(|(label, p, values)| SizeBlock {
                label,
                pretrain_seed_ids: (0..p as i64).collect(),
                values,
                pred_labels: None,
            })
            .collect();
        Self::from_parts(TensorParts {
            value_kind,
            sizes,
            finetune_seed_ids: (0..finetune_seeds as i64).collect(),
            checkpoint_ids: (0..checkpoints as i64).collect(),
            instance_ids,
            gold_labels: None,
        })
    }

    pub fn from_parts(parts: TensorParts) -> Result<Self> {
        let TensorParts {
            value_kind,
            sizes,
            finetune_seed_ids,
            checkpoint_ids,
            instance_ids,
            gold_labels,
        } = parts;
        if sizes.is_empty() {
            return Err(Error::Schema("tensor has no sizes".into()));
        }
        if finetune_seed_ids.is_empty() || checkpoint_ids.is_empty() || instance_ids.is_empty() {
            return Err(Error::Schema(
                "finetune seeds, checkpoints and instances must all be non-empty".into(),
            ));
        }
        check_unique("instance id", instance_ids.iter())?;
        check_unique("finetune seed", finetune_seed_ids.iter())?;
        check_unique("checkpoint", checkpoint_ids.iter())?;
        check_unique("size label", sizes.iter().map(|s| &s.label))?;
        if let Some(gold) = &gold_labels {
            if gold.len() != instance_ids.len() {
                return Err(Error::Schema(format!(
                    "{} gold labels for {} instances",
                    gold.len(),
                    instance_ids.len()
                )));
            }
        }
        let run_cells = finetune_seed_ids.len() * checkpoint_ids.len() * instance_ids.len();
        for block in &sizes {
            if block.pretrain_seed_ids.is_empty() {
                return Err(Error::Schema(format!("size {} has no pretraining seeds", block.label)));
            }
            check_unique("pretrain seed", block.pretrain_seed_ids.iter())?;
            let expected = block.pretrain_seed_ids.len() * run_cells;
            if block.values.len() != expected {
                return Err(Error::Schema(format!(
                    "size {} has {} values, expected {}",
                    block.label,
                    block.values.len(),
                    expected
                )));
            }
            if let Some(labels) = &block.pred_labels {
                if labels.len() != expected {
                    return Err(Error::Schema(format!(
                        "size {} has {} predicted labels, expected {}",
                        block.label,
                        labels.len(),
                        expected
                    )));
                }
            }
            for (idx, &v) in block.values.iter().enumerate() {
                let bad = match value_kind {
                    ValueKind::Correctness => v != 0.0 && v != 1.0,
                    ValueKind::Probability => !(0.0..=1.0).contains(&v),
                };
                if bad {
                    return Err(Error::ValueOutOfRange {
                        value: v,
                        location: format!("size {} cell {}", block.label, idx),
                    });
                }
            }
        }
        Ok(PredictionTensor {
            value_kind,
            sizes,
            finetune_seed_ids,
            checkpoint_ids,
            instance_ids,
            gold_labels,
        })
    }

    pub fn into_parts(self) -> TensorParts {
        TensorParts {
            value_kind: self.value_kind,
            sizes: self.sizes,
            finetune_seed_ids: self.finetune_seed_ids,
            checkpoint_ids: self.checkpoint_ids,
            instance_ids: self.instance_ids,
            gold_labels: self.gold_labels,
        }
    }

    pub fn value_kind(&self) -> ValueKind {
        self.value_kind
    }

    pub fn sizes(&self) -> &[SizeBlock] {
        &self.sizes
    }

    pub fn size_labels(&self) -> impl Iterator<Item = &str> {
        self.sizes.iter().map(|s| s.label.as_str())
    }

    pub fn size_index(&self, label: &str) -> Result<usize> {
        self.sizes
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownSize(label.to_string()))
    }

    pub fn block(&self, size: usize) -> &SizeBlock {
        &self.sizes[size]
    }

    pub fn pretrain_seeds(&self, size: usize) -> usize {
        self.sizes[size].pretrain_seed_ids.len()
    }

    pub fn finetune_seeds(&self) -> usize {
        self.finetune_seed_ids.len()
    }

    pub fn checkpoints(&self) -> usize {
        self.checkpoint_ids.len()
    }

    pub fn instances(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn finetune_seed_ids(&self) -> &[i64] {
        &self.finetune_seed_ids
    }

    pub fn checkpoint_ids(&self) -> &[i64] {
        &self.checkpoint_ids
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn gold_labels(&self) -> Option<&[String]> {
        self.gold_labels.as_deref()
    }

    pub fn has_labels(&self) -> bool {
        self.gold_labels.is_some() && self.sizes.iter().all(|s| s.pred_labels.is_some())
    }

    /// `(sizes, pretrain seeds of the first size, finetune seeds, checkpoints, instances)`.
    pub fn dims(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.sizes.len(),
            self.pretrain_seeds(0),
            self.finetune_seeds(),
            self.checkpoints(),
            self.instances(),
        )
    }

    #[inline]
    fn run_offset(&self, p: usize, f: usize, e: usize) -> usize {
        ((p * self.finetune_seeds() + f) * self.checkpoints() + e) * self.instances()
    }

    /// Per-instance values of one run.
    #[inline]
    pub fn run(&self, size: usize, p: usize, f: usize, e: usize) -> &[f64] {
        let start = self.run_offset(p, f, e);
        &self.sizes[size].values[start..start + self.instances()]
    }

    #[inline]
    pub fn value(&self, size: usize, p: usize, f: usize, e: usize, i: usize) -> f64 {
        self.sizes[size].values[self.run_offset(p, f, e) + i]
    }

    pub fn run_labels(&self, size: usize, p: usize, f: usize, e: usize) -> Option<&[String]> {
        let start = self.run_offset(p, f, e);
        self.sizes[size]
            .pred_labels
            .as_ref()
            .map(|l| &l[start..start + self.instances()])
    }
}

fn check_unique<'a, T>(what: &str, items: impl Iterator<Item = &'a T>) -> Result<()>
where
    T: std::hash::Hash + Eq + std::fmt::Debug + 'a,
{
    let mut seen = std::collections::HashSet::new();
    for item in items {
        if !seen.insert(item) {
            return Err(Error::Schema(format!("duplicate {what} {item:?}")));
        }
    }
    Ok(())
}
