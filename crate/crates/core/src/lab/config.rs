use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of a pretrained model's correctness rate on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RateLaw {
    Point { rate: f64 },
    Mixture { rates: Vec<f64>, weights: Vec<f64> },
    Beta { a: f64, b: f64 },
}

impl RateLaw {
    /// `(E[q], E[q^2])`.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            RateLaw::Point { rate } => (*rate, rate * rate),
            RateLaw::Mixture { rates, weights } => rates
                .iter()
                .zip(weights)
                .fold((0.0, 0.0), |(m1, m2), (r, w)| (m1 + w * r, m2 + w * r * r)),
            RateLaw::Beta { a, b } => {
                let s = a + b;
                (a / s, a * (a + 1.0) / (s * (s + 1.0)))
            }
        }
    }

    /// Atoms `(rate, weight)` for discrete laws.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            RateLaw::Point { rate } => Some(vec![(*rate, 1.0)]),
            RateLaw::Mixture { rates, weights } => Some(rates.iter().copied().zip(weights.iter().copied()).collect()),
            RateLaw::Beta { .. } => None,
        }
    }

    fn validate(&self, at: &str) -> Result<()> {
        let in_unit = |r: f64| (0.0..=1.0).contains(&r);
        match self {
            RateLaw::Point { rate } if !in_unit(*rate) => Err(Error::InvalidConfig(format!("{at}: rate {rate} outside [0, 1]"))),
            RateLaw::Mixture { rates, weights } => {
                if rates.is_empty() || rates.len() != weights.len() {
                    return Err(Error::InvalidConfig(format!("{at}: mixture needs equal, non-empty rates and weights")));
                }
                if let Some(r) = rates.iter().find(|r| !in_unit(**r)) {
                    return Err(Error::InvalidConfig(format!("{at}: rate {r} outside [0, 1]")));
                }
                check_weights(weights, at)
            }
            RateLaw::Beta { a, b } if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) => {
                Err(Error::InvalidConfig(format!("{at}: beta parameters must be positive")))
            }
            _ => Ok(()),
        }
    }
}

fn check_weights(weights: &[f64], at: &str) -> Result<()> {
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidConfig(format!("{at}: negative weight")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("{at}: weights sum to {total}, not 1")));
    }
    Ok(())
}

/// How a pretrained model's rate turns into finetuned runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinetuneLaw {
    /// Each run correct independently with the pretrained rate.
    #[default]
    Bernoulli,
    /// Exactly `round(q * F)` of the `F` runs correct, in random order.
    ExactFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceClass {
    pub name: String,
    pub weight: f64,
    /// Rate law per size label.
    pub laws: BTreeMap<String, RateLaw>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeConfig {
    /// Size labels, smallest first.
    pub sizes: Vec<String>,
    pub classes: Vec<InstanceClass>,
    pub pretrain_seeds: usize,
    pub finetune_seeds: usize,
    #[serde(default = "one")]
    pub checkpoints: usize,
    pub instances: usize,
    /// Draw a fresh rate for every finetuning run instead of sharing one per
    /// pretraining seed.
    #[serde(default)]
    pub independent: bool,
    #[serde(default)]
    pub finetune_law: FinetuneLaw,
    /// With `kappa`, each run draws its own rate from
    /// `Beta(kappa q, kappa (1 - q))` and checkpoints are Bernoulli of it.
    /// Without it every checkpoint repeats the run's outcome.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_concentration: Option<f64>,
}

fn one() -> usize {
    1
}

impl GenerativeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("no sizes".into()));
        }
        let sizes: BTreeSet<&String> = self.sizes.iter().collect();
        if sizes.len() != self.sizes.len() {
            return Err(Error::InvalidConfig("duplicate size labels".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidConfig("no instance classes".into()));
        }
        let weights: Vec<f64> = self.classes.iter().map(|c| c.weight).collect();
        check_weights(&weights, "class weights")?;
        for class in &self.classes {
            let keys: BTreeSet<&String> = class.laws.keys().collect();
            if keys != sizes {
                return Err(Error::InvalidConfig(format!("class {} must give one law per size", class.name)));
            }
            for (size, law) in &class.laws {
                law.validate(&format!("class {} size {size}", class.name))?;
            }
        }
        if self.pretrain_seeds == 0 || self.finetune_seeds == 0 || self.checkpoints == 0 || self.instances == 0 {
            return Err(Error::InvalidConfig("all counts must be positive".into()));
        }
        if let Some(k) = self.checkpoint_concentration {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidConfig(format!("checkpoint concentration {k} must be positive")));
            }
        }
        if self.finetune_law == FinetuneLaw::ExactFraction {
            if self.independent {
                return Err(Error::InvalidConfig("exact_fraction needs a shared pretraining rate".into()));
            }
            if self.checkpoint_concentration.is_some() {
                return Err(Error::InvalidConfig("exact_fraction has no checkpoint law".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: GenerativeConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Instances per class by largest remainder, ties to the earlier class.
    pub fn class_counts(&self) -> Vec<usize> {
        let n = self.instances as f64;
        let quotas: Vec<f64> = self.classes.iter().map(|c| c.weight * n).collect();
        let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for &c in order.iter().take(self.instances.saturating_sub(assigned)) {
            counts[c] += 1;
        }
        counts
    }

    /// Class index of every instance, in contiguous blocks.
    pub fn instance_classes(&self) -> Vec<usize> {
        self.class_counts()
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect()
    }
}

/// Convenience for configs where every class has a point-mass rate per size.
pub fn point_config(sizes: &[&str], classes: &[(&str, f64, &[f64])], counts: (usize, usize, usize, usize)) -> GenerativeConfig {
    GenerativeConfig {
        sizes: sizes.iter().map(|s| s.to_string()).collect(),
        classes: classes
            .iter()
            .map(|(name, weight, rates)| InstanceClass {
                name: name.to_string(),
                weight: *weight,
                laws: sizes
                    .iter()
                    .zip(rates.iter())
                    .map(|(s, &rate)| (s.to_string(), RateLaw::Point { rate }))
                    .collect(),
            })
            .collect(),
        pretrain_seeds: counts.0,
        finetune_seeds: counts.1,
        checkpoints: counts.2,
        instances: counts.3,
        independent: false,
        finetune_law: FinetuneLaw::Bernoulli,
        checkpoint_concentration: None,
    }
}
