//! Dense JSON manifest: one row-major `(p, f, e, i)` value array per size.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::tensor::{PredictionTensor, SizeBlock, TensorParts, ValueKind};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestDims {
    /// Pretraining seed count per size, in `sizes` order.
    pub pretrain_seeds: Vec<usize>,
    pub finetune_seeds: usize,
    pub checkpoints: usize,
    pub instances: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub value_kind: ValueKind,
    pub sizes: Vec<String>,
    pub dims: ManifestDims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_ids: Option<Vec<String>>,
    pub values: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_labels: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_labels: Option<Vec<String>>,
}

impl Manifest {
    pub fn from_tensor(tensor: &PredictionTensor) -> Self {
        let labels = tensor.has_labels();
        Manifest {
            value_kind: tensor.value_kind(),
            sizes: tensor.size_labels().map(String::from).collect(),
            dims: ManifestDims {
                pretrain_seeds: (0..tensor.sizes().len()).map(|s| tensor.pretrain_seeds(s)).collect(),
                finetune_seeds: tensor.finetune_seeds(),
                checkpoints: tensor.checkpoints(),
                instances: tensor.instances(),
            },
            instance_ids: Some(tensor.instance_ids().to_vec()),
            values: tensor
                .sizes()
                .iter()
                .map(|b| (b.label.clone(), b.values.clone()))
                .collect(),
            pred_labels: labels.then(|| {
                tensor
                    .sizes()
                    .iter()
                    .map(|b| (b.label.clone(), b.pred_labels.clone().unwrap_or_default()))
                    .collect()
            }),
            gold_labels: if labels {
                tensor.gold_labels().map(<[String]>::to_vec)
            } else {
                None
            },
        }
    }

    pub fn into_tensor(mut self) -> Result<PredictionTensor> {
        if self.dims.pretrain_seeds.len() != self.sizes.len() {
            return Err(Error::Schema(format!(
                "{} pretrain seed counts for {} sizes",
                self.dims.pretrain_seeds.len(),
                self.sizes.len()
            )));
        }
        let instance_ids = match self.instance_ids.take() {
            Some(ids) if ids.len() != self.dims.instances => {
                return Err(Error::Schema(format!(
                    "{} instance ids for {} instances",
                    ids.len(),
                    self.dims.instances
                )))
            }
            Some(ids) => ids,
            None => (0..self.dims.instances).map(|i| i.to_string()).collect(),
        };
        let mut sizes = Vec::with_capacity(self.sizes.len());
        for (label, &p) in self.sizes.iter().zip(&self.dims.pretrain_seeds) {
            let values = self
                .values
                .remove(label)
                .ok_or_else(|| Error::Schema(format!("no values for size {label:?}")))?;
            let pred_labels = match self.pred_labels.as_mut() {
                Some(map) => Some(
                    map.remove(label)
                        .ok_or_else(|| Error::Schema(format!("no predicted labels for size {label:?}")))?,
                ),
                None => None,
            };
            sizes.push(SizeBlock {
                label: label.clone(),
                pretrain_seed_ids: (0..p as i64).collect(),
                values,
                pred_labels,
            });
        }
        if let Some(extra) = self.values.keys().next() {
            return Err(Error::Schema(format!("values for undeclared size {extra:?}")));
        }
        PredictionTensor::from_parts(TensorParts {
            value_kind: self.value_kind,
            sizes,
            finetune_seed_ids: (0..self.dims.finetune_seeds as i64).collect(),
            checkpoint_ids: (0..self.dims.checkpoints as i64).collect(),
            instance_ids,
            gold_labels: self.gold_labels,
        })
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<PredictionTensor> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    manifest.into_tensor()
}

pub fn write_manifest(tensor: &PredictionTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&Manifest::from_tensor(tensor))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
