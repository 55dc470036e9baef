use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rng::CounterRng;
use crate::variance::DecompositionResult;

pub const JITTER: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Pretvar,
    Finevar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpOptions {
    /// Fix the noise variance instead of searching over it.
    pub pinned_noise: Option<f64>,
    /// Fit on a seeded random subset when there are more points than this.
    pub max_points: usize,
    pub subsample_seed: u64,
}

impl Default for GpOptions {
    fn default() -> Self {
        GpOptions {
            pinned_noise: None,
            max_points: 500,
            subsample_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalVarianceCurve {
    pub component: Component,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// `None` when the inputs were degenerate and no regression was fit.
    pub hyperparameters: Option<Hyperparameters>,
    pub log_marginal_likelihood: Option<f64>,
    pub degenerate: bool,
    pub points_used: usize,
}

impl ConditionalVarianceCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("b2,mean,variance\n");
        for ((b, m), v) in self.grid.iter().zip(&self.mean).zip(&self.variance) {
            out.push_str(&format!("{b},{m},{v}\n"));
        }
        out
    }
}

/// Lengthscales `10^-2 .. 10^0` in 8 log steps, signal variances
/// `{0.01, 0.1, 1}`, noise variances `10^-4 .. 10^-1`.
pub fn hyperparameter_grid(pinned_noise: Option<f64>) -> Vec<Hyperparameters> {
    let lengthscales: Vec<f64> = (0..8).map(|i| 10f64.powf(-2.0 + 2.0 * i as f64 / 7.0)).collect();
    let noises = match pinned_noise {
        Some(n) => vec![n],
        None => vec![1e-4, 1e-3, 1e-2, 1e-1],
    };
    let mut grid = Vec::new();
    for &lengthscale in &lengthscales {
        for signal_variance in [0.01, 0.1, 1.0] {
            for &noise_variance in &noises {
                grid.push(Hyperparameters {
                    lengthscale,
                    signal_variance,
                    noise_variance,
                    jitter: JITTER,
                });
            }
        }
    }
    grid
}

fn kernel(h: &Hyperparameters, a: f64, b: f64) -> f64 {
    let d = (a - b) / h.lengthscale;
    h.signal_variance * (-0.5 * d * d).exp()
}

/// Fitted regression on centred targets.
#[derive(Debug, Clone)]
pub struct GpFit {
    pub hyperparameters: Hyperparameters,
    pub x: Vec<f64>,
    pub offset: f64,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    alpha: DVector<f64>,
    pub log_marginal_likelihood: f64,
}

impl GpFit {
    pub fn new(x: &[f64], y: &[f64], h: Hyperparameters) -> Option<GpFit> {
        let n = x.len();
        let offset = y.iter().sum::<f64>() / n as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - offset));
        let k = DMatrix::from_fn(n, n, |i, j| {
            kernel(&h, x[i], x[j]) + if i == j { h.noise_variance + h.jitter } else { 0.0 }
        });
        let chol = k.cholesky()?;
        let alpha = chol.solve(&yc);
        let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
        let lml = -0.5 * yc.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        Some(GpFit {
            hyperparameters: h,
            x: x.to_vec(),
            offset,
            chol,
            alpha,
            log_marginal_likelihood: lml,
        })
    }

    /// Posterior mean and latent-function variance at `t`.
    pub fn predict(&self, t: f64) -> (f64, f64) {
        let h = &self.hyperparameters;
        let ks = DVector::from_iterator(self.x.len(), self.x.iter().map(|&xi| kernel(h, xi, t)));
        let mean = self.offset + ks.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&ks).expect("factor is non-singular");
        let var = (h.signal_variance - v.dot(&v)).max(0.0);
        (mean, var)
    }
}

/// Log marginal likelihood of centred `y` under `h`, or `None` if the kernel
/// matrix is not positive definite.
pub fn log_marginal_likelihood(x: &[f64], y: &[f64], h: Hyperparameters) -> Option<f64> {
    GpFit::new(x, y, h).map(|f| f.log_marginal_likelihood)
}

/// Grid search for the candidate with the largest log marginal likelihood;
/// ties keep the earlier candidate.
pub fn fit_gp(x: &[f64], y: &[f64], pinned_noise: Option<f64>) -> Result<GpFit> {
    let grid = hyperparameter_grid(pinned_noise);
    let fits = par::map_range(Execution::default(), grid.len(), |i| log_marginal_likelihood(x, y, grid[i]));
    let mut best: Option<(usize, f64)> = None;
    for (i, lml) in fits.iter().enumerate() {
        if let Some(l) = *lml {
            if best.is_none_or(|(_, b)| l > b) {
                best = Some((i, l));
            }
        }
    }
    let (i, _) = best.ok_or_else(|| Error::InvalidArgument("no hyperparameter candidate gave a valid fit".into()))?;
    Ok(GpFit::new(x, y, grid[i]).expect("refit of a valid candidate"))
}

/// Posterior mean and variance of `y` given `x` at each grid point.
pub fn regress(component: Component, x: &[f64], y: &[f64], grid: &[f64], options: &GpOptions) -> Result<ConditionalVarianceCurve> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("{} inputs for {} targets", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::TooFewGroups(x.len()));
    }
    if x.iter().all(|&v| v == x[0]) {
        log::warn!("all bias values identical; returning the constant mean");
        let n = y.len() as f64;
        let m = y.iter().sum::<f64>() / n;
        let s2 = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        return Ok(ConditionalVarianceCurve {
            component,
            grid: grid.to_vec(),
            mean: vec![m; grid.len()],
            variance: vec![s2 / n; grid.len()],
            hyperparameters: None,
            log_marginal_likelihood: None,
            degenerate: true,
            points_used: y.len(),
        });
    }
    let (x, y) = if x.len() > options.max_points {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        CounterRng::new(options.subsample_seed).shuffle(&mut idx);
        idx.truncate(options.max_points);
        idx.sort_unstable();
        (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| y[i]).collect())
    } else {
        (x.to_vec(), y.to_vec())
    };
    let fit = fit_gp(&x, &y, options.pinned_noise)?;
    let (mean, variance): (Vec<f64>, Vec<f64>) = grid.iter().map(|&t| fit.predict(t)).unzip();
    Ok(ConditionalVarianceCurve {
        component,
        grid: grid.to_vec(),
        mean,
        variance,
        hyperparameters: Some(fit.hyperparameters),
        log_marginal_likelihood: Some(fit.log_marginal_likelihood),
        degenerate: false,
        points_used: x.len(),
    })
}

/// Evenly spaced points on `[0, 1]`.
pub fn unit_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// A variance component regressed on squared bias across instances.
pub fn conditional_variance_curve(
    decomp: &DecompositionResult,
    component: Component,
    grid: &[f64],
    options: &GpOptions,
) -> Result<ConditionalVarianceCurve> {
    let y = match component {
        Component::Pretvar => &decomp.pretvar,
        Component::Finevar => &decomp.finevar,
    };
    regress(component, &decomp.bias2, y, grid, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = hyperparameter_grid(None);
        assert_eq!(g.len(), 96);
        assert!((g[0].lengthscale - 0.01).abs() < 1e-15);
        assert!((g[95].lengthscale - 1.0).abs() < 1e-12);
        assert_eq!(hyperparameter_grid(Some(0.0)).len(), 24);
    }

    #[test]
    fn constant_targets_give_constant_mean() {
        let x = [0.0, 0.1, 0.5, 0.7, 0.9];
        let c = regress(Component::Pretvar, &x, &[0.3; 5], &unit_grid(11), &GpOptions::default()).unwrap();
        assert!(c.mean.iter().all(|m| (m - 0.3).abs() < 1e-9));
        assert!(c.variance.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn degenerate_inputs_flagged() {
        let c = regress(Component::Finevar, &[0.2; 3], &[1.0, 2.0, 3.0], &[0.0, 1.0], &GpOptions::default()).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.mean, vec![2.0, 2.0]);
    }
}
