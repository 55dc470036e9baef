use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{PredictionTensor, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisagreementBasis {
    PredictedLabels,
    /// Differences of correctness bits; a lower bound on label disagreement.
    CorrectnessBits,
    /// Mean absolute difference of gold-class probabilities.
    ValueDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedNoiseStats {
    pub size: String,
    pub basis: DisagreementBasis,
    pub diff_ftune: f64,
    pub diff_ptrain: f64,
    pub std_all: f64,
}

/// Fraction of instances on which two runs differ.
pub fn disagreement(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn label_disagreement(a: &[String], b: &[String]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}

/// Prediction disagreement between runs sharing a pretraining seed, between
/// runs from different pretraining seeds, and the spread of run accuracy.
/// Uses the last checkpoint.
pub fn seed_noise_stats(tensor: &PredictionTensor, size: &str) -> Result<SeedNoiseStats> {
    let s = tensor.size_index(size)?;
    let (p_n, f_n) = (tensor.pretrain_seeds(s), tensor.finetune_seeds());
    if p_n < 2 {
        return Err(Error::TooFewRuns(p_n));
    }
    if f_n < 2 {
        return Err(Error::TooFewRuns(f_n));
    }
    let e = tensor.checkpoints() - 1;
    let basis = if tensor.has_labels() {
        DisagreementBasis::PredictedLabels
    } else if tensor.value_kind() == ValueKind::Correctness {
        log::info!("no predicted labels; correctness-bit disagreement is a lower bound");
        DisagreementBasis::CorrectnessBits
    } else {
        DisagreementBasis::ValueDifference
    };
    let differ = |(p1, f1): (usize, usize), (p2, f2): (usize, usize)| match basis {
        DisagreementBasis::PredictedLabels => label_disagreement(
            tensor.run_labels(s, p1, f1, e).expect("labels present"),
            tensor.run_labels(s, p2, f2, e).expect("labels present"),
        ),
        _ => disagreement(tensor.run(s, p1, f1, e), tensor.run(s, p2, f2, e)),
    };

    let (mut within, mut within_n) = (0.0, 0usize);
    for p in 0..p_n {
        for f1 in 0..f_n {
            for f2 in f1 + 1..f_n {
                within += differ((p, f1), (p, f2));
                within_n += 1;
            }
        }
    }
    let (mut across, mut across_n) = (0.0, 0usize);
    for p1 in 0..p_n {
        for p2 in p1 + 1..p_n {
            for f1 in 0..f_n {
                for f2 in 0..f_n {
                    across += differ((p1, f1), (p2, f2));
                    across_n += 1;
                }
            }
        }
    }

    let n = tensor.instances() as f64;
    let accs: Vec<f64> = (0..p_n)
        .flat_map(|p| (0..f_n).map(move |f| (p, f)))
        .map(|(p, f)| tensor.run(s, p, f, e).iter().sum::<f64>() / n)
        .collect();
    // shifted by the first run so identical runs give exactly zero
    let shifted: Vec<f64> = accs.iter().map(|a| a - accs[0]).collect();
    let m = shifted.iter().sum::<f64>() / shifted.len() as f64;
    let var = shifted.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (shifted.len() - 1) as f64;

    Ok(SeedNoiseStats {
        size: size.to_string(),
        basis,
        diff_ftune: within / within_n as f64,
        diff_ptrain: across / across_n as f64,
        std_all: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_disagreement() {
        assert_eq!(disagreement(&[1.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 1.0, 0.0]), 0.5);
    }

    #[test]
    fn identical_runs_have_no_noise() {
        let t = PredictionTensor::new(
            ValueKind::Correctness,
            vec!["a".into(), "b".into()],
            2,
            1,
            vec![("s".into(), 2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0])],
        )
        .unwrap();
        let st = seed_noise_stats(&t, "s").unwrap();
        assert_eq!((st.diff_ftune, st.diff_ptrain, st.std_all), (0.0, 0.0, 0.0));
        assert_eq!(st.basis, DisagreementBasis::CorrectnessBits);
    }
}
