use crate::error::{Error, Result};

/// Group-level inputs to the between-group variance estimator: unbiased
/// group means and unbiased estimates of each mean's variance.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSample {
    pub means: Vec<f64>,
    pub mean_variances: Vec<f64>,
}

impl LevelSample {
    pub fn new(means: Vec<f64>, mean_variances: Vec<f64>) -> Result<Self> {
        if means.len() != mean_variances.len() {
            return Err(Error::InvalidArgument(format!(
                "{} group means but {} variance estimates",
                means.len(),
                mean_variances.len()
            )));
        }
        Ok(LevelSample { means, mean_variances })
    }

    pub fn groups(&self) -> usize {
        self.means.len()
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (`n - 1` denominator).
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Variance across group means minus the average variance of those means.
/// Unbiased for the between-group variance and deliberately not clamped:
/// it goes negative when the true variance is near zero.
pub fn core_unbiased_variance(sample: &LevelSample) -> Result<f64> {
    let groups = sample.groups();
    if groups < 2 {
        return Err(Error::TooFewGroups(groups));
    }
    Ok(sample_variance(&sample.means) - mean(&sample.mean_variances))
}
