//! Named configurations used by the certification suite and shipped as
//! JSON under `configs/`.

use crate::lab::config::{point_config, FinetuneLaw, GenerativeConfig, InstanceClass, RateLaw};

fn laws(pairs: &[(&str, RateLaw)]) -> std::collections::BTreeMap<String, RateLaw> {
    pairs.iter().map(|(s, l)| (s.to_string(), l.clone())).collect()
}

/// Two sizes, every instance at least as easy for the larger one, ten
/// independent seeds per size.
pub fn zero_decay(instances: usize) -> GenerativeConfig {
    let mut c = point_config(
        &["small", "large"],
        &[
            ("flat-mid", 0.25, &[0.5, 0.5]),
            ("gain", 0.25, &[0.3, 0.6]),
            ("near-top", 0.25, &[0.8, 0.9]),
            ("flat-hard", 0.25, &[0.1, 0.1]),
        ],
        (10, 1, 1, instances),
    );
    c.independent = true;
    c
}

/// The small model's pretraining either solves the instance outright
/// (probability 0.1) or never does; the large model is right 20% of the
/// time. Two pretraining seeds and 200 finetuning runs per size.
pub fn perfect_or_bad(finetune_law: FinetuneLaw, instances: usize) -> GenerativeConfig {
    GenerativeConfig {
        sizes: vec!["small".into(), "large".into()],
        classes: vec![InstanceClass {
            name: "all".into(),
            weight: 1.0,
            laws: laws(&[
                ("small", RateLaw::Mixture { rates: vec![1.0, 0.0], weights: vec![0.1, 0.9] }),
                ("large", RateLaw::Point { rate: 0.2 }),
            ]),
        }],
        pretrain_seeds: 2,
        finetune_seeds: 200,
        checkpoints: 1,
        instances,
        independent: false,
        finetune_law,
        checkpoint_concentration: None,
    }
}

/// 10,000 instances, two seeds per size: 9,998 always right, one right only
/// for the small model, one right only for the large model.
pub fn extreme_pair() -> GenerativeConfig {
    point_config(
        &["small", "large"],
        &[
            ("stable", 0.9998, &[1.0, 1.0]),
            ("decaying", 0.0001, &[1.0, 0.0]),
            ("improving", 0.0001, &[0.0, 1.0]),
        ],
        (2, 1, 1, 10_000),
    )
}

/// Beta(2, 2) pretraining rates on one size. With `checkpoints`, runs draw
/// their own rate at concentration 4 and are observed at three checkpoints.
pub fn beta_hierarchy(checkpoints: bool, instances: usize) -> GenerativeConfig {
    GenerativeConfig {
        sizes: vec!["base".into()],
        classes: vec![InstanceClass {
            name: "beta".into(),
            weight: 1.0,
            laws: laws(&[("base", RateLaw::Beta { a: 2.0, b: 2.0 })]),
        }],
        pretrain_seeds: 4,
        finetune_seeds: 4,
        checkpoints: if checkpoints { 3 } else { 1 },
        instances,
        independent: false,
        finetune_law: FinetuneLaw::Bernoulli,
        checkpoint_concentration: checkpoints.then_some(4.0),
    }
}

/// Deterministic outcomes with some decaying instances.
pub fn noiseless_decay(instances: usize) -> GenerativeConfig {
    point_config(
        &["small", "large"],
        &[
            ("stable", 0.6, &[1.0, 1.0]),
            ("decaying", 0.1, &[1.0, 0.0]),
            ("improving", 0.2, &[0.0, 1.0]),
            ("hard", 0.1, &[0.0, 0.0]),
        ],
        (10, 3, 1, instances),
    )
}

/// Bernoulli outcomes with a decaying class.
pub fn noisy_decay(instances: usize) -> GenerativeConfig {
    point_config(
        &["small", "large"],
        &[
            ("decaying", 0.2, &[0.8, 0.5]),
            ("improving", 0.5, &[0.3, 0.7]),
            ("flat", 0.3, &[0.6, 0.6]),
        ],
        (10, 2, 1, instances),
    )
}

/// Ten pretraining seeds per size with Beta rates; a fifth of the instances
/// decay sharply.
pub fn beta_decay(instances: usize) -> GenerativeConfig {
    GenerativeConfig {
        sizes: vec!["small".into(), "large".into()],
        classes: vec![
            InstanceClass {
                name: "decaying".into(),
                weight: 0.2,
                laws: laws(&[("small", RateLaw::Beta { a: 8.0, b: 2.0 }), ("large", RateLaw::Beta { a: 2.0, b: 8.0 })]),
            },
            InstanceClass {
                name: "flat".into(),
                weight: 0.8,
                laws: laws(&[("small", RateLaw::Beta { a: 2.0, b: 2.0 }), ("large", RateLaw::Beta { a: 2.0, b: 2.0 })]),
            },
        ],
        pretrain_seeds: 10,
        finetune_seeds: 1,
        checkpoints: 1,
        instances,
        independent: false,
        finetune_law: FinetuneLaw::Bernoulli,
        checkpoint_concentration: None,
    }
}

/// Three sizes for momentum: rates improve jointly so that consecutive
/// gains correlate within accuracy buckets.
pub fn three_sizes(instances: usize) -> GenerativeConfig {
    GenerativeConfig {
        sizes: vec!["mini".into(), "medium".into(), "large".into()],
        classes: vec![
            InstanceClass {
                name: "rising".into(),
                weight: 0.5,
                laws: laws(&[
                    ("mini", RateLaw::Beta { a: 2.0, b: 3.0 }),
                    ("medium", RateLaw::Beta { a: 3.0, b: 2.0 }),
                    ("large", RateLaw::Beta { a: 4.0, b: 1.0 }),
                ]),
            },
            InstanceClass {
                name: "mixed".into(),
                weight: 0.5,
                laws: laws(&[
                    ("mini", RateLaw::Mixture { rates: vec![0.2, 0.9], weights: vec![0.5, 0.5] }),
                    ("medium", RateLaw::Beta { a: 1.0, b: 1.0 }),
                    ("large", RateLaw::Point { rate: 0.5 }),
                ]),
            },
        ],
        pretrain_seeds: 4,
        finetune_seeds: 2,
        checkpoints: 1,
        instances,
        independent: false,
        finetune_law: FinetuneLaw::Bernoulli,
        checkpoint_concentration: None,
    }
}
