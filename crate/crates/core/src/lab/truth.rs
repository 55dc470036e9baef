use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::config::{FinetuneLaw, GenerativeConfig, RateLaw};

/// Population values of one size on one instance class, for zero-one loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeTruth {
    pub size: String,
    pub accuracy: f64,
    pub loss: f64,
    pub bias2: f64,
    pub pretvar: f64,
    pub finevar: f64,
    pub ckptvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTruth {
    pub name: String,
    pub weight: f64,
    pub sizes: Vec<SizeTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTruth {
    pub s1: String,
    pub s2: String,
    /// `Acc(s2) - Acc(s1)` per class.
    pub delta_acc: Vec<f64>,
    pub mean_delta_acc: f64,
    /// Weight of the classes with `delta_acc < 0`.
    pub decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTruth {
    pub classes: Vec<ClassTruth>,
    /// Class-weighted averages per size.
    pub aggregate: Vec<SizeTruth>,
    pub pairs: Vec<PairTruth>,
}

impl AnalyticTruth {
    pub fn size(&self, label: &str) -> Option<&SizeTruth> {
        self.aggregate.iter().find(|s| s.size == label)
    }

    pub fn pair(&self, s1: &str, s2: &str) -> Option<&PairTruth> {
        self.pairs.iter().find(|p| p.s1 == s1 && p.s2 == s2)
    }
}

fn size_truth(config: &GenerativeConfig, size: &str, law: &RateLaw) -> Result<SizeTruth> {
    // (E[g], Var(g), E[g(1-g)]) with g the per-seed rate that runs realize
    let (mean, var_q, within) = match config.finetune_law {
        FinetuneLaw::Bernoulli => {
            let (m1, m2) = law.moments();
            (m1, m2 - m1 * m1, m1 - m2)
        }
        FinetuneLaw::ExactFraction => {
            let atoms = law
                .atoms()
                .ok_or_else(|| Error::UnsupportedLaw("beta rates with exact_fraction finetuning".into()))?;
            let f = config.finetune_seeds as f64;
            let (m1, m2) = atoms.iter().fold((0.0, 0.0), |(a, b), &(r, w)| {
                let g = (r * f).round() / f;
                (a + w * g, b + w * g * g)
            });
            (m1, m2 - m1 * m1, m1 - m2)
        }
    };
    let (pretvar, finevar, ckptvar) = match (config.independent, config.checkpoint_concentration) {
        (false, None) => (var_q, within, 0.0),
        (false, Some(k)) => (var_q, within / (k + 1.0), within * k / (k + 1.0)),
        (true, None) => (0.0, var_q + within, 0.0),
        (true, Some(k)) => (0.0, var_q + within / (k + 1.0), within * k / (k + 1.0)),
    };
    Ok(SizeTruth {
        size: size.to_string(),
        accuracy: mean,
        loss: 1.0 - mean,
        bias2: (1.0 - mean) * (1.0 - mean),
        pretvar,
        finevar,
        ckptvar,
    })
}

/// Closed-form ground truth of a config.
pub fn analytic_truth(config: &GenerativeConfig) -> Result<AnalyticTruth> {
    config.validate()?;
    let classes = config
        .classes
        .iter()
        .map(|c| {
            Ok(ClassTruth {
                name: c.name.clone(),
                weight: c.weight,
                sizes: config
                    .sizes
                    .iter()
                    .map(|s| size_truth(config, s, &c.laws[s]))
                    .collect::<Result<Vec<_>>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let weighted = |s: usize, get: fn(&SizeTruth) -> f64| classes.iter().map(|c| c.weight * get(&c.sizes[s])).sum::<f64>();
    let aggregate = config
        .sizes
        .iter()
        .enumerate()
        .map(|(s, label)| SizeTruth {
            size: label.clone(),
            accuracy: weighted(s, |t| t.accuracy),
            loss: weighted(s, |t| t.loss),
            bias2: weighted(s, |t| t.bias2),
            pretvar: weighted(s, |t| t.pretvar),
            finevar: weighted(s, |t| t.finevar),
            ckptvar: weighted(s, |t| t.ckptvar),
        })
        .collect();

    let mut pairs = Vec::new();
    for a in 0..config.sizes.len() {
        for b in a + 1..config.sizes.len() {
            let delta_acc: Vec<f64> = classes.iter().map(|c| c.sizes[b].accuracy - c.sizes[a].accuracy).collect();
            pairs.push(PairTruth {
                s1: config.sizes[a].clone(),
                s2: config.sizes[b].clone(),
                mean_delta_acc: classes.iter().zip(&delta_acc).map(|(c, d)| c.weight * d).sum(),
                decay: classes.iter().zip(&delta_acc).filter(|(_, d)| **d < 0.0).map(|(c, _)| c.weight).sum(),
                delta_acc,
            });
        }
    }
    Ok(AnalyticTruth {
        classes,
        aggregate,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::config::{point_config, InstanceClass};

    #[test]
    fn identical_laws_have_no_decay() {
        let c = point_config(&["s", "l"], &[("a", 0.3, &[0.4, 0.4]), ("b", 0.7, &[0.9, 0.9])], (2, 2, 1, 10));
        let t = analytic_truth(&c).unwrap();
        assert_eq!(t.pairs[0].decay, 0.0);
        assert_eq!(t.pairs[0].mean_delta_acc, 0.0);
    }

    #[test]
    fn beta_moments() {
        let mut c = point_config(&["s"], &[("a", 1.0, &[0.0])], (2, 2, 1, 10));
        c.classes[0].laws.insert("s".into(), RateLaw::Beta { a: 2.0, b: 2.0 });
        let t = analytic_truth(&c).unwrap();
        let s = &t.aggregate[0];
        assert!((s.pretvar - 0.05).abs() < 1e-15);
        assert!((s.finevar - 0.2).abs() < 1e-15);
        assert!((s.loss - (s.bias2 + s.pretvar + s.finevar + s.ckptvar)).abs() < 1e-15);
        c.finetune_law = FinetuneLaw::ExactFraction;
        assert!(matches!(analytic_truth(&c), Err(Error::UnsupportedLaw(_))));
    }

    #[test]
    fn perfect_or_bad_small_model() {
        let c = GenerativeConfig {
            sizes: vec!["small".into(), "large".into()],
            classes: vec![InstanceClass {
                name: "x".into(),
                weight: 1.0,
                laws: [
                    ("small".to_string(), RateLaw::Mixture { rates: vec![1.0, 0.0], weights: vec![0.1, 0.9] }),
                    ("large".to_string(), RateLaw::Point { rate: 0.2 }),
                ]
                .into_iter()
                .collect(),
            }],
            pretrain_seeds: 2,
            finetune_seeds: 200,
            checkpoints: 1,
            instances: 1,
            independent: false,
            finetune_law: FinetuneLaw::ExactFraction,
            checkpoint_concentration: None,
        };
        let t = analytic_truth(&c).unwrap();
        assert!((t.pairs[0].mean_delta_acc - 0.1).abs() < 1e-15);
        assert_eq!(t.pairs[0].decay, 0.0);
    }
}
