use serde::{Deserialize, Serialize};

use crate::decay::{decay_analysis, mixing_baseline, paired_views, delta_acc_hat, SplitPolicy, SplitSpec, ViewMode};
use crate::error::{Error, Result};
use crate::lab::config::GenerativeConfig;
use crate::lab::generate::generate_with;
use crate::lab::truth::analytic_truth;
use crate::par::{self, Execution};
use crate::rng::CounterRng;
use crate::store::{CheckpointPolicy, PredictionTensor};
use crate::variance::{decompose_with, LossKind};

pub const MIN_TRIALS: usize = 100;
/// Width of every acceptance band, in standard errors.
pub const BAND_SE: f64 = 3.0;

/// A named analysis applied to each generated tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "statistic", rename_all = "snake_case")]
pub enum Statistic {
    /// `diff(t)` at every threshold of the canonical-split curve.
    DecayDiff { s1: String, s2: String, mode: ViewMode },
    /// Fractions of instances with observed and baseline difference `<= threshold`.
    LowerTail { s1: String, s2: String, mode: ViewMode, threshold: f64 },
    /// Instance-averaged variance components under zero-one loss.
    Components { size: String, policy: CheckpointPolicy },
}

impl Statistic {
    pub fn evaluate(&self, tensor: &PredictionTensor) -> Result<Vec<(String, f64)>> {
        match self {
            Statistic::DecayDiff { s1, s2, mode } => {
                let curve = decay_analysis(tensor, s1, s2, *mode, SplitPolicy::Canonical)?.curve;
                Ok((0..curve.thresholds.len())
                    .map(|k| (format!("diff@{}/{}", curve.threshold_numerator(k), curve.denominator), curve.diff[k]))
                    .collect())
            }
            Statistic::LowerTail { s1, s2, mode, threshold } => {
                let (v1, v2) = paired_views(tensor, s1, s2, *mode)?;
                let observed = delta_acc_hat(&v1, &v2)?;
                let baseline = mixing_baseline(&v1, &v2, &SplitSpec::canonical(v1.slice_count()))?;
                let tail = |d: &crate::decay::DeltaAccEstimate| {
                    (0..d.len()).filter(|&i| d.value(i) <= threshold + 1e-12).count() as f64 / d.len() as f64
                };
                Ok(vec![("observed_tail".into(), tail(&observed)), ("baseline_tail".into(), tail(&baseline))])
            }
            Statistic::Components { size, policy } => {
                let d = decompose_with(tensor, size, LossKind::ZeroOne, *policy)?;
                let mut out = vec![
                    ("pretvar".to_string(), d.aggregate.pretvar),
                    ("finevar".to_string(), d.aggregate.finevar),
                ];
                if let Some(c) = d.aggregate.ckptvar {
                    out.push(("ckptvar".into(), c));
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// `|mean - truth| <= 3 se`.
    TwoSided,
    /// `mean <= truth + 3 se`.
    AtMost,
    /// Every trial equals the truth.
    EveryTrial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub name: String,
    pub mean: f64,
    pub se: f64,
    pub min: f64,
    pub max: f64,
    pub truth: Option<f64>,
    pub band: Option<Band>,
    pub pass: Option<bool>,
}

impl StatSummary {
    pub fn check(&mut self, truth: f64, band: Band) -> bool {
        // slack for rounding in instance-averaged sums
        let eps = 1e-12;
        let pass = match band {
            Band::TwoSided => (self.mean - truth).abs() <= BAND_SE * self.se + eps,
            Band::AtMost => self.mean <= truth + BAND_SE * self.se + eps,
            Band::EveryTrial => self.min == truth && self.max == truth,
        };
        self.truth = Some(truth);
        self.band = Some(band);
        self.pass = Some(pass);
        pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub rng_seed: u64,
    pub statistic: Statistic,
    pub stats: Vec<StatSummary>,
}

impl TrialSummary {
    pub fn get(&self, name: &str) -> Option<&StatSummary> {
        self.stats.iter().find(|s| s.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut StatSummary> {
        self.stats.iter_mut().find(|s| s.name == name)
    }

    /// All checked statistics passed.
    pub fn passed(&self) -> bool {
        self.stats.iter().all(|s| s.pass != Some(false))
    }
}

/// Mean, standard error and range over trials.
pub fn summarize(name: String, values: &[f64]) -> StatSummary {
    let r = values.len() as f64;
    let mean = par::pairwise_sum(values) / r;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if values.len() > 1 { par::pairwise_sum(&dev) / (r - 1.0) } else { 0.0 };
    StatSummary {
        name,
        mean,
        se: (var / r).sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        truth: None,
        band: None,
        pass: None,
    }
}

/// `trials` independent generate-then-analyze passes. Trial `r` draws from
/// the stream forked at `r`, so results do not depend on the backend.
/// Statistics with a closed-form truth are checked against it.
pub fn run_trials(
    config: &GenerativeConfig,
    statistic: &Statistic,
    trials: usize,
    rng_seed: u64,
    exec: Execution,
) -> Result<TrialSummary> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    config.validate()?;
    let root = CounterRng::new(rng_seed);
    let rows = par::try_map_range(exec, trials, |r| {
        let tensor = generate_with(config, &root.fork(r as u64))?;
        statistic.evaluate(&tensor)
    })?;
    let names: Vec<String> = rows[0].iter().map(|(n, _)| n.clone()).collect();
    let mut stats: Vec<StatSummary> = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let column: Vec<f64> = rows.iter().map(|row| row[k].1).collect();
            summarize(name.clone(), &column)
        })
        .collect();

    if let Ok(truth) = analytic_truth(config) {
        match statistic {
            Statistic::DecayDiff { s1, s2, .. } => {
                if let Some(pair) = truth.pair(s1, s2) {
                    for s in &mut stats {
                        s.check(pair.decay, Band::AtMost);
                    }
                }
            }
            Statistic::Components { size, .. } => {
                if let Some(t) = truth.size(size) {
                    for s in &mut stats {
                        let target = match s.name.as_str() {
                            "pretvar" => t.pretvar,
                            "finevar" => t.finevar,
                            _ => t.ckptvar,
                        };
                        s.check(target, Band::TwoSided);
                    }
                }
            }
            Statistic::LowerTail { .. } => {}
        }
    }
    Ok(TrialSummary {
        trials,
        rng_seed,
        statistic: statistic.clone(),
        stats,
    })
}
