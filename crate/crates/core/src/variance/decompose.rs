use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::store::{CheckpointPolicy, PredictionTensor, ValueKind};
use crate::variance::estimator::{core_unbiased_variance, mean, sample_variance, LevelSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(1 - c)^2` on correctness bits.
    ZeroOne,
    /// `(1 - p)^2` on the probability of the gold class.
    SquaredProbability,
}

/// One instance's runs as `[p][f][e]`, restricted to the chosen checkpoints.
struct InstanceRuns {
    pretrain: usize,
    finetune: usize,
    checkpoints: usize,
    values: Vec<f64>,
}

impl InstanceRuns {
    fn gather(tensor: &PredictionTensor, size: usize, instance: usize, policy: CheckpointPolicy) -> Self {
        let e_range = match policy {
            CheckpointPolicy::Last => tensor.checkpoints() - 1..tensor.checkpoints(),
            CheckpointPolicy::All => 0..tensor.checkpoints(),
        };
        let (p_n, f_n) = (tensor.pretrain_seeds(size), tensor.finetune_seeds());
        let mut values = Vec::with_capacity(p_n * f_n * e_range.len());
        for p in 0..p_n {
            for f in 0..f_n {
                for e in e_range.clone() {
                    values.push(tensor.value(size, p, f, e, instance));
                }
            }
        }
        InstanceRuns {
            pretrain: p_n,
            finetune: f_n,
            checkpoints: e_range.len(),
            values,
        }
    }

    fn run(&self, p: usize, f: usize) -> &[f64] {
        let start = (p * self.finetune + f) * self.checkpoints;
        &self.values[start..start + self.checkpoints]
    }

    fn finetune_means(&self, p: usize) -> Vec<f64> {
        (0..self.finetune).map(|f| mean(self.run(p, f))).collect()
    }

    /// Estimated variance of each finetune run's checkpoint mean.
    fn finetune_mean_variances(&self, p: usize) -> Vec<f64> {
        let e = self.checkpoints as f64;
        (0..self.finetune).map(|f| sample_variance(self.run(p, f)) / e).collect()
    }

    fn ckptvar(&self) -> f64 {
        let mut total = 0.0;
        for p in 0..self.pretrain {
            for f in 0..self.finetune {
                total += sample_variance(self.run(p, f));
            }
        }
        total / (self.pretrain * self.finetune) as f64
    }

    /// Between-finetune variance within pretraining seed `p`.
    fn finevar_within(&self, p: usize) -> Result<f64> {
        let means = self.finetune_means(p);
        if self.checkpoints == 1 {
            return Ok(sample_variance(&means));
        }
        core_unbiased_variance(&LevelSample::new(means, self.finetune_mean_variances(p))?)
    }

    fn finevar(&self) -> Result<f64> {
        let mut total = 0.0;
        for p in 0..self.pretrain {
            total += self.finevar_within(p)?;
        }
        Ok(total / self.pretrain as f64)
    }

    fn pretvar(&self) -> Result<f64> {
        let f_n = self.finetune as f64;
        let mut means = Vec::with_capacity(self.pretrain);
        let mut phis = Vec::with_capacity(self.pretrain);
        for p in 0..self.pretrain {
            let ft_means = self.finetune_means(p);
            means.push(mean(&ft_means));
            let mut phi = self.finevar_within(p)? / f_n;
            if self.checkpoints > 1 {
                phi += self.finetune_mean_variances(p).iter().sum::<f64>() / (f_n * f_n);
            }
            phis.push(phi);
        }
        core_unbiased_variance(&LevelSample::new(means, phis)?)
    }

    fn loss(&self) -> f64 {
        self.values.iter().map(|c| (1.0 - c) * (1.0 - c)).sum::<f64>() / self.values.len() as f64
    }
}

fn per_instance<F>(tensor: &PredictionTensor, size: &str, policy: CheckpointPolicy, f: F) -> Result<Vec<f64>>
where
    F: Fn(&InstanceRuns) -> Result<f64> + Sync + Send,
{
    let s = tensor.size_index(size)?;
    par::try_map_range(Execution::default(), tensor.instances(), |i| {
        f(&InstanceRuns::gather(tensor, s, i, policy))
    })
}

/// Mean over runs of the sample variance across checkpoints.
pub fn ckptvar(tensor: &PredictionTensor, size: &str) -> Result<Vec<f64>> {
    if tensor.checkpoints() < 2 {
        return Err(Error::TooFewCheckpoints(tensor.checkpoints()));
    }
    per_instance(tensor, size, CheckpointPolicy::All, |r| Ok(r.ckptvar()))
}

/// Finetuning variance: sample variance across finetune runs when there is
/// one checkpoint, otherwise the bias-corrected estimator over checkpoint
/// means. Averaged over pretraining seeds.
pub fn finevar(tensor: &PredictionTensor, size: &str) -> Result<Vec<f64>> {
    finevar_with(tensor, size, CheckpointPolicy::All)
}

pub fn finevar_with(tensor: &PredictionTensor, size: &str, policy: CheckpointPolicy) -> Result<Vec<f64>> {
    if tensor.finetune_seeds() < 2 {
        return Err(Error::TooFewFinetuneRuns(tensor.finetune_seeds()));
    }
    per_instance(tensor, size, policy, InstanceRuns::finevar)
}

/// Pretraining variance via the bias-corrected estimator, with each seed
/// mean's variance estimated from the finetune (and checkpoint) levels.
pub fn pretvar(tensor: &PredictionTensor, size: &str) -> Result<Vec<f64>> {
    pretvar_with(tensor, size, CheckpointPolicy::All)
}

pub fn pretvar_with(tensor: &PredictionTensor, size: &str, policy: CheckpointPolicy) -> Result<Vec<f64>> {
    let s = tensor.size_index(size)?;
    if tensor.pretrain_seeds(s) < 2 {
        return Err(Error::TooFewPretrainSeeds(tensor.pretrain_seeds(s)));
    }
    if tensor.finetune_seeds() < 2 {
        return Err(Error::TooFewFinetuneRuns(tensor.finetune_seeds()));
    }
    per_instance(tensor, size, policy, InstanceRuns::pretvar)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMeans {
    pub loss: f64,
    pub bias2: f64,
    pub pretvar: f64,
    pub finevar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ckptvar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub size: String,
    pub loss_kind: LossKind,
    pub instance_ids: Vec<String>,
    pub loss: Vec<f64>,
    pub bias2: Vec<f64>,
    pub pretvar: Vec<f64>,
    pub finevar: Vec<f64>,
    /// Present in three-level mode (two or more checkpoints used).
    pub ckptvar: Option<Vec<f64>>,
    pub aggregate: ComponentMeans,
}

impl DecompositionResult {
    /// `bias2 + pretvar + finevar (+ ckptvar)` for instance `i`, summed left
    /// to right.
    pub fn total(&self, i: usize) -> f64 {
        let mut t = self.bias2[i] + self.pretvar[i] + self.finevar[i];
        if let Some(c) = &self.ckptvar {
            t += c[i];
        }
        t
    }

    /// Rows `instance_id,loss,bias2,pretvar,finevar[,ckptvar]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance_id,loss,bias2,pretvar,finevar");
        if self.ckptvar.is_some() {
            out.push_str(",ckptvar");
        }
        out.push('\n');
        for i in 0..self.loss.len() {
            out.push_str(&format!(
                "{},{},{},{},{}",
                self.instance_ids[i], self.loss[i], self.bias2[i], self.pretvar[i], self.finevar[i]
            ));
            if let Some(c) = &self.ckptvar {
                out.push_str(&format!(",{}", c[i]));
            }
            out.push('\n');
        }
        out
    }
}

fn sum_parts(bias2: f64, parts: &[f64]) -> f64 {
    parts.iter().fold(bias2, |acc, p| acc + p)
}

/// Residual `r` with `r + parts[0] + parts[1] + ... == loss` exactly, if a
/// float within 64 ulps of `loss - sum(parts)` achieves it.
fn exact_residual(loss: f64, parts: &[f64]) -> Option<f64> {
    let guess = parts.iter().fold(loss, |acc, p| acc - p);
    if sum_parts(guess, parts) == loss {
        return Some(guess);
    }
    let (mut up, mut down) = (guess, guess);
    for _ in 0..64 {
        up = up.next_up();
        down = down.next_down();
        if sum_parts(up, parts) == loss {
            return Some(up);
        }
        if sum_parts(down, parts) == loss {
            return Some(down);
        }
    }
    None
}

/// Squared bias as the residual of the loss. When a component is larger
/// than the loss in magnitude, the float grid near the residual can be too
/// coarse for any residual to reproduce the loss; the component is then
/// moved by the fewest ulps (at most 64) that admit one.
fn residual(loss: f64, parts: &mut [f64]) -> f64 {
    if let Some(r) = exact_residual(loss, parts) {
        return r;
    }
    for k in 1..=64 {
        for j in 0..parts.len() {
            let original = parts[j];
            for step in [f64::next_up as fn(f64) -> f64, f64::next_down] {
                parts[j] = (0..k).fold(original, |v, _| step(v));
                if let Some(r) = exact_residual(loss, parts) {
                    log::debug!("component {j} moved {k} ulps for exact additivity");
                    return r;
                }
            }
            parts[j] = original;
        }
    }
    parts.iter().fold(loss, |acc, p| acc - p)
}

pub fn decompose(tensor: &PredictionTensor, size: &str, loss_kind: LossKind) -> Result<DecompositionResult> {
    decompose_with(tensor, size, loss_kind, CheckpointPolicy::All)
}

/// Loss and its components per instance. `bias2` is the residual, so the
/// components add up to the loss exactly.
pub fn decompose_with(
    tensor: &PredictionTensor,
    size: &str,
    loss_kind: LossKind,
    policy: CheckpointPolicy,
) -> Result<DecompositionResult> {
    match (loss_kind, tensor.value_kind()) {
        (LossKind::ZeroOne, ValueKind::Correctness) | (LossKind::SquaredProbability, ValueKind::Probability) => {}
        (LossKind::ZeroOne, kind) => return Err(Error::RequiresCorrectness(kind.name())),
        (LossKind::SquaredProbability, _) => return Err(Error::RequiresProbability),
    }
    let s = tensor.size_index(size)?;
    if tensor.pretrain_seeds(s) < 2 {
        return Err(Error::TooFewPretrainSeeds(tensor.pretrain_seeds(s)));
    }
    if tensor.finetune_seeds() < 2 {
        return Err(Error::TooFewFinetuneRuns(tensor.finetune_seeds()));
    }
    let three_level = policy == CheckpointPolicy::All && tensor.checkpoints() >= 2;

    let rows = par::try_map_range(Execution::default(), tensor.instances(), |i| -> Result<[f64; 5]> {
        let runs = InstanceRuns::gather(tensor, s, i, policy);
        let loss = runs.loss();
        let pv = runs.pretvar()?;
        let fv = runs.finevar()?;
        let cv = if three_level { runs.ckptvar() } else { 0.0 };
        let mut parts = [pv, fv, cv];
        let used = if three_level { 3 } else { 2 };
        let bias2 = residual(loss, &mut parts[..used]);
        Ok([loss, bias2, parts[0], parts[1], parts[2]])
    })?;

    let column = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let (loss, bias2, pv, fv) = (column(0), column(1), column(2), column(3));
    let cv = three_level.then(|| column(4));
    let aggregate = ComponentMeans {
        loss: par::pairwise_sum(&loss) / loss.len() as f64,
        bias2: par::pairwise_sum(&bias2) / loss.len() as f64,
        pretvar: par::pairwise_sum(&pv) / loss.len() as f64,
        finevar: par::pairwise_sum(&fv) / loss.len() as f64,
        ckptvar: cv.as_ref().map(|c| par::pairwise_sum(c) / loss.len() as f64),
    };
    Ok(DecompositionResult {
        size: size.to_string(),
        loss_kind,
        instance_ids: tensor.instance_ids().to_vec(),
        loss,
        bias2,
        pretvar: pv,
        finevar: fv,
        ckptvar: cv,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(p: usize, f: usize, e: usize, values: Vec<f64>) -> PredictionTensor {
        PredictionTensor::new(ValueKind::Correctness, vec!["x".into()], f, e, vec![("s".into(), p, values)]).unwrap()
    }

    #[test]
    fn ckptvar_hand_value() {
        // P=2, F=2, E=2; only (0,0) varies across checkpoints
        let t = single(2, 2, 2, vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(ckptvar(&t, "s").unwrap(), vec![0.125]);
        let flat = single(2, 2, 2, vec![1.0; 8]);
        assert_eq!(ckptvar(&flat, "s").unwrap(), vec![0.0]);
        assert!(matches!(ckptvar(&single(2, 2, 1, vec![1.0; 4]), "s"), Err(Error::TooFewCheckpoints(1))));
    }

    #[test]
    fn finevar_hand_value() {
        let t = single(1, 4, 1, vec![1.0, 1.0, 0.0, 0.0]);
        assert!((finevar(&t, "s").unwrap()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(finevar(&single(2, 1, 1, vec![1.0; 2]), "s"), Err(Error::TooFewFinetuneRuns(1))));
    }

    #[test]
    fn pretvar_hand_value() {
        let t = single(2, 2, 1, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(pretvar(&t, "s").unwrap(), vec![0.5]);
        // pure finetune noise: estimator goes negative and is not clamped
        let noisy = single(2, 2, 1, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(pretvar(&noisy, "s").unwrap(), vec![-0.25]);
        assert!(matches!(pretvar(&single(1, 2, 1, vec![1.0; 2]), "s"), Err(Error::TooFewPretrainSeeds(1))));
    }

    #[test]
    fn decompose_hand_values() {
        let t = single(2, 2, 1, vec![1.0, 1.0, 0.0, 0.0]);
        let d = decompose(&t, "s", LossKind::ZeroOne).unwrap();
        assert_eq!((d.loss[0], d.pretvar[0], d.finevar[0], d.bias2[0]), (0.5, 0.5, 0.0, 0.0));
        assert!(d.ckptvar.is_none());

        let ok = single(2, 2, 1, vec![1.0; 4]);
        let d = decompose(&ok, "s", LossKind::ZeroOne).unwrap();
        assert_eq!((d.loss[0], d.pretvar[0], d.finevar[0], d.bias2[0]), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn loss_kind_preconditions() {
        let t = single(2, 2, 1, vec![1.0; 4]);
        assert!(matches!(decompose(&t, "s", LossKind::SquaredProbability), Err(Error::RequiresProbability)));
    }

    #[test]
    fn residual_reproduces_loss() {
        let mut parts = [0.1, 0.2, 0.30000000000000004];
        let r = residual(0.7, &mut parts);
        assert_eq!(sum_parts(r, &parts), 0.7);
        let mut found = 0;
        for a in 1..60 {
            for b in 1..30 {
                let mut parts = [-(a as f64) / 97.0, b as f64 / 89.0];
                let before = parts;
                let r = residual(1.0 / 3.0, &mut parts);
                assert_eq!(sum_parts(r, &parts), 1.0 / 3.0, "a={a} b={b}");
                assert!((parts[0] - before[0]).abs() < 1e-14 && (parts[1] - before[1]).abs() < 1e-14);
                found += usize::from(exact_residual(1.0 / 3.0, &before).is_none());
            }
        }
        assert!(found > 0);
    }
}
