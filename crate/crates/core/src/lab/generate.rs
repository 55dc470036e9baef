use rand_distr::{Beta, Distribution};

use crate::error::Result;
use crate::lab::config::{FinetuneLaw, GenerativeConfig, RateLaw};
use crate::rng::CounterRng;
use crate::store::{PredictionTensor, ValueKind};

/// A rate law with its sampler prepared once.
enum Sampler {
    Point(f64),
    Mixture(Vec<f64>, Vec<f64>),
    Beta(Beta<f64>),
}

impl Sampler {
    fn new(law: &RateLaw) -> Self {
        match law {
            RateLaw::Point { rate } => Sampler::Point(*rate),
            RateLaw::Mixture { rates, weights } => {
                let mut acc = 0.0;
                let cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                Sampler::Mixture(rates.clone(), cumulative)
            }
            RateLaw::Beta { a, b } => Sampler::Beta(Beta::new(*a, *b).expect("validated beta parameters")),
        }
    }

    fn draw(&self, rng: &mut CounterRng) -> f64 {
        match self {
            Sampler::Point(r) => *r,
            Sampler::Mixture(rates, cumulative) => {
                let u = rng.uniform();
                let k = cumulative.iter().position(|&c| u < c).unwrap_or(rates.len() - 1);
                rates[k]
            }
            Sampler::Beta(beta) => beta.sample(rng),
        }
    }
}

/// Per-run rate around the pretrained rate `q`.
fn run_rate(q: f64, kappa: Option<f64>, rng: &mut CounterRng) -> f64 {
    match kappa {
        Some(k) if q > 0.0 && q < 1.0 => Beta::new(k * q, k * (1.0 - q)).expect("positive parameters").sample(rng),
        _ => q,
    }
}

const RATE_STREAM: u64 = u64::MAX;
const ORDER_STREAM: u64 = u64::MAX - 1;

/// Draw a correctness tensor from the hierarchy. Streams are keyed by
/// `(size, pretrain seed, instance)` and then by finetune seed.
pub fn generate(config: &GenerativeConfig, rng_seed: u64) -> Result<PredictionTensor> {
    generate_with(config, &CounterRng::new(rng_seed))
}

pub fn generate_with(config: &GenerativeConfig, root: &CounterRng) -> Result<PredictionTensor> {
    config.validate()?;
    let (p_n, f_n, e_n, n) = (config.pretrain_seeds, config.finetune_seeds, config.checkpoints, config.instances);
    let classes = config.instance_classes();
    let mut instance_ids = Vec::with_capacity(n);
    let mut seen = vec![0usize; config.classes.len()];
    for &c in &classes {
        instance_ids.push(format!("{}-{}", config.classes[c].name, seen[c]));
        seen[c] += 1;
    }

    let mut sizes = Vec::with_capacity(config.sizes.len());
    for (s, label) in config.sizes.iter().enumerate() {
        let samplers: Vec<Sampler> = config.classes.iter().map(|c| Sampler::new(&c.laws[label])).collect();
        let mut values = vec![0.0; p_n * f_n * e_n * n];
        let mut order: Vec<usize> = (0..f_n).collect();
        for p in 0..p_n {
            for (i, &c) in classes.iter().enumerate() {
                let cell = root.fork_path(&[s as u64, p as u64, i as u64]);
                let sampler = &samplers[c];
                let q = sampler.draw(&mut cell.fork(RATE_STREAM));
                let correct_runs = match config.finetune_law {
                    FinetuneLaw::ExactFraction => {
                        let m = (q * f_n as f64).round() as usize;
                        order.iter_mut().enumerate().for_each(|(k, o)| *o = k);
                        cell.fork(ORDER_STREAM).shuffle(&mut order);
                        Some(m)
                    }
                    FinetuneLaw::Bernoulli => None,
                };
                for f in 0..f_n {
                    let mut run = cell.fork(f as u64);
                    let base = (p * f_n + f) * e_n * n + i;
                    if let Some(m) = correct_runs {
                        let v = if order[f] < m { 1.0 } else { 0.0 };
                        for e in 0..e_n {
                            values[base + e * n] = v;
                        }
                        continue;
                    }
                    let q = if config.independent { sampler.draw(&mut run) } else { q };
                    match config.checkpoint_concentration {
                        Some(_) => {
                            let r = run_rate(q, config.checkpoint_concentration, &mut run);
                            for e in 0..e_n {
                                values[base + e * n] = if run.bernoulli(r) { 1.0 } else { 0.0 };
                            }
                        }
                        None => {
                            let v = if run.bernoulli(q) { 1.0 } else { 0.0 };
                            for e in 0..e_n {
                                values[base + e * n] = v;
                            }
                        }
                    }
                }
            }
        }
        sizes.push((label.clone(), p_n, values));
    }
    PredictionTensor::new(ValueKind::Correctness, instance_ids, f_n, e_n, sizes)
}
