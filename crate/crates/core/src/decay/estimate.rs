use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{Provenance, SeedView};

/// Per-instance accuracy estimate: the mean over a view's slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceAccuracy {
    pub size: String,
    pub provenance: Provenance,
    pub slices: usize,
    pub values: Vec<f64>,
    /// Number of correct slices per instance, present for binary views.
    pub counts: Option<Vec<u32>>,
}

pub fn instance_accuracy(view: &SeedView) -> InstanceAccuracy {
    let n = view.instances();
    let mut sums = vec![0.0; n];
    for slice in &view.slices {
        for (acc, &v) in sums.iter_mut().zip(slice) {
            *acc += v;
        }
    }
    let slices = view.slice_count();
    let counts = view
        .binary
        .then(|| sums.iter().map(|&s| s as u32).collect());
    InstanceAccuracy {
        size: view.size.clone(),
        provenance: view.provenance,
        slices,
        values: sums.into_iter().map(|s| s / slices as f64).collect(),
        counts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Observed,
    Baseline,
}

/// Which slices of each size form group A of the mixing baseline; the
/// complements form group B.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub group_a1: Vec<usize>,
    pub group_a2: Vec<usize>,
}

impl SplitSpec {
    /// First half of each size against the second half.
    pub fn canonical(slices_per_size: usize) -> Self {
        let k = slices_per_size / 2;
        SplitSpec {
            group_a1: (0..k).collect(),
            group_a2: (0..k).collect(),
        }
    }

    /// Swap the roles of groups A and B.
    pub fn swapped(&self, slices_per_size: usize) -> Self {
        let complement = |a: &[usize]| (0..slices_per_size).filter(|j| !a.contains(j)).collect();
        SplitSpec {
            group_a1: complement(&self.group_a1),
            group_a2: complement(&self.group_a2),
        }
    }

    fn membership(&self, slices_per_size: usize) -> Result<(Vec<bool>, Vec<bool>)> {
        let k = slices_per_size / 2;
        let mask = |group: &[usize], which: &str| -> Result<Vec<bool>> {
            if group.len() != k {
                return Err(Error::BadSplit(format!(
                    "{which} has {} slices in group A, expected {k}",
                    group.len()
                )));
            }
            let mut m = vec![false; slices_per_size];
            for &j in group {
                if j >= slices_per_size || m[j] {
                    return Err(Error::BadSplit(format!("{which}: bad or repeated slice index {j}")));
                }
                m[j] = true;
            }
            Ok(m)
        };
        Ok((mask(&self.group_a1, "size 1")?, mask(&self.group_a2, "size 2")?))
    }
}

/// Instance differences. Binary views give exact rationals
/// `numerator / denominator`; real-valued views keep floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaValues {
    Exact { denominator: u64, numerators: Vec<i64> },
    Real(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaAccEstimate {
    pub s1: String,
    pub s2: String,
    pub kind: EstimateKind,
    pub values: DeltaValues,
    pub split: Option<SplitSpec>,
}

impl DeltaAccEstimate {
    pub fn len(&self) -> usize {
        match &self.values {
            DeltaValues::Exact { numerators, .. } => numerators.len(),
            DeltaValues::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match &self.values {
            DeltaValues::Exact {
                denominator,
                numerators,
            } => numerators[i] as f64 / *denominator as f64,
            DeltaValues::Real(v) => v[i],
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    pub fn exact(&self) -> Option<(u64, &[i64])> {
        match &self.values {
            DeltaValues::Exact {
                denominator,
                numerators,
            } => Some((*denominator, numerators)),
            DeltaValues::Real(_) => None,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn check_instances(view1: &SeedView, view2: &SeedView) -> Result<()> {
    if view1.instances() != view2.instances() {
        return Err(Error::InstanceMismatch {
            left: view1.instances(),
            right: view2.instances(),
        });
    }
    Ok(())
}

/// Observed difference `Acc(view2) - Acc(view1)` per instance.
pub fn delta_acc_hat(view1: &SeedView, view2: &SeedView) -> Result<DeltaAccEstimate> {
    check_instances(view1, view2)?;
    let acc1 = instance_accuracy(view1);
    let acc2 = instance_accuracy(view2);
    let values = match (&acc1.counts, &acc2.counts) {
        (Some(c1), Some(c2)) => {
            let (n1, n2) = (acc1.slices as u64, acc2.slices as u64);
            let den = n1 / gcd(n1, n2) * n2;
            let (m1, m2) = ((den / n1) as i64, (den / n2) as i64);
            DeltaValues::Exact {
                denominator: den,
                numerators: c1
                    .iter()
                    .zip(c2)
                    .map(|(&a, &b)| b as i64 * m2 - a as i64 * m1)
                    .collect(),
            }
        }
        _ => DeltaValues::Real(
            acc1.values
                .iter()
                .zip(&acc2.values)
                .map(|(a, b)| b - a)
                .collect(),
        ),
    };
    Ok(DeltaAccEstimate {
        s1: view1.size.clone(),
        s2: view2.size.clone(),
        kind: EstimateKind::Observed,
        values,
        split: None,
    })
}

/// Mixing baseline: (mean of group A) - (mean of group B), where each group
/// takes `k` slices from each size.
pub fn mixing_baseline(view1: &SeedView, view2: &SeedView, split: &SplitSpec) -> Result<DeltaAccEstimate> {
    check_instances(view1, view2)?;
    let two_k = view1.slice_count();
    if view2.slice_count() != two_k {
        return Err(Error::SliceCountMismatch {
            left: two_k,
            right: view2.slice_count(),
        });
    }
    if two_k % 2 == 1 {
        return Err(Error::OddSeedCount(two_k));
    }
    let (in_a1, in_a2) = split.membership(two_k)?;
    let n = view1.instances();
    let mut signed = vec![0.0f64; n];
    for (view, in_a) in [(view1, &in_a1), (view2, &in_a2)] {
        for (slice, &a) in view.slices.iter().zip(in_a) {
            let sign = if a { 1.0 } else { -1.0 };
            for (acc, &v) in signed.iter_mut().zip(slice) {
                *acc += sign * v;
            }
        }
    }
    let values = if view1.binary && view2.binary {
        DeltaValues::Exact {
            denominator: two_k as u64,
            numerators: signed.into_iter().map(|x| x as i64).collect(),
        }
    } else {
        DeltaValues::Real(signed.into_iter().map(|x| x / two_k as f64).collect())
    };
    Ok(DeltaAccEstimate {
        s1: view1.size.clone(),
        s2: view2.size.clone(),
        kind: EstimateKind::Baseline,
        values,
        split: Some(split.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn view(size: &str, slices: Vec<Vec<f64>>) -> SeedView {
        SeedView::new(size, Provenance::FlattenAllRuns, slices).unwrap()
    }

    fn random_view(rng: &mut CounterRng, size: &str, slices: usize, n: usize) -> SeedView {
        view(
            size,
            (0..slices)
                .map(|_| (0..n).map(|_| if rng.bernoulli(0.6) { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    #[test]
    fn accuracy_basics() {
        let all = view("s", vec![vec![1.0, 1.0]; 4]);
        assert_eq!(instance_accuracy(&all).values, vec![1.0, 1.0]);
        let mut slices = vec![vec![0.0]; 10];
        for s in slices.iter_mut().take(3) {
            s[0] = 1.0;
        }
        assert_eq!(instance_accuracy(&view("s", slices)).values, vec![0.3]);
    }

    #[test]
    fn accuracy_matches_recount() {
        let mut rng = CounterRng::new(5);
        let v = random_view(&mut rng, "s", 8, 50);
        let acc = instance_accuracy(&v);
        for i in 0..50 {
            let ones = v.slices.iter().filter(|s| s[i] == 1.0).count();
            assert_eq!(acc.counts.as_ref().unwrap()[i], ones as u32);
            assert_eq!(acc.values[i], ones as f64 / 8.0);
        }
    }

    #[test]
    fn delta_identity_and_extremes() {
        let mut rng = CounterRng::new(9);
        let v = random_view(&mut rng, "a", 6, 20);
        assert!(delta_acc_hat(&v, &v).unwrap().to_f64().iter().all(|&d| d == 0.0));
        let small = view("small", vec![vec![1.0]; 3]);
        let large = view("large", vec![vec![0.0]; 3]);
        assert_eq!(delta_acc_hat(&small, &large).unwrap().to_f64(), vec![-1.0]);
    }

    #[test]
    fn delta_recomposes_accuracies() {
        let mut rng = CounterRng::new(17);
        let v1 = random_view(&mut rng, "a", 6, 40);
        let v2 = random_view(&mut rng, "b", 4, 40);
        let d = delta_acc_hat(&v1, &v2).unwrap();
        let (a1, a2) = (instance_accuracy(&v1), instance_accuracy(&v2));
        let (den, _) = d.exact().unwrap();
        assert_eq!(den, 12);
        for i in 0..40 {
            assert!((d.value(i) - (a2.values[i] - a1.values[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn instance_mismatch() {
        let a = view("a", vec![vec![1.0]]);
        let b = view("b", vec![vec![1.0, 0.0]]);
        assert!(matches!(delta_acc_hat(&a, &b), Err(Error::InstanceMismatch { .. })));
    }

    #[test]
    fn baseline_hand_cases() {
        let same = view("s", vec![vec![1.0, 0.0]; 4]);
        let b = mixing_baseline(&same, &same, &SplitSpec::canonical(4)).unwrap();
        assert!(b.to_f64().iter().all(|&d| d == 0.0));

        // two all-correct small slices, two all-wrong large slices
        let small = view("small", vec![vec![1.0]; 2]);
        let large = view("large", vec![vec![0.0]; 2]);
        let b = mixing_baseline(&small, &large, &SplitSpec::canonical(2)).unwrap();
        assert_eq!(b.to_f64(), vec![0.0]);
        assert_eq!(delta_acc_hat(&small, &large).unwrap().to_f64(), vec![-1.0]);
    }

    #[test]
    fn baseline_errors() {
        let odd = view("s", vec![vec![1.0]; 3]);
        assert!(matches!(
            mixing_baseline(&odd, &odd, &SplitSpec::canonical(3)),
            Err(Error::OddSeedCount(3))
        ));
        let four = view("s", vec![vec![1.0]; 4]);
        let bad = SplitSpec {
            group_a1: vec![0],
            group_a2: vec![0, 1],
        };
        assert!(matches!(mixing_baseline(&four, &four, &bad), Err(Error::BadSplit(_))));
        let repeated = SplitSpec {
            group_a1: vec![0, 0],
            group_a2: vec![0, 1],
        };
        assert!(matches!(mixing_baseline(&four, &four, &repeated), Err(Error::BadSplit(_))));
        let two = view("s", vec![vec![1.0]; 2]);
        assert!(matches!(
            mixing_baseline(&four, &two, &SplitSpec::canonical(4)),
            Err(Error::SliceCountMismatch { .. })
        ));
    }

    #[test]
    fn swapping_groups_negates() {
        let mut rng = CounterRng::new(33);
        let v1 = random_view(&mut rng, "a", 6, 30);
        let v2 = random_view(&mut rng, "b", 6, 30);
        let split = SplitSpec::canonical(6);
        let fwd = mixing_baseline(&v1, &v2, &split).unwrap();
        let back = mixing_baseline(&v1, &v2, &split.swapped(6)).unwrap();
        let (_, f) = fwd.exact().unwrap();
        let (_, b) = back.exact().unwrap();
        assert!(f.iter().zip(b).all(|(x, y)| *x == -*y));
    }
}
