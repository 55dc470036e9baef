use instance_delta::decay::{
    decay_analysis, decay_curve, delta_acc_hat, export_decaying_instances, instance_accuracy, mixing_baseline,
    paired_views, DeltaValues, SplitPolicy, SplitSpec, ViewMode,
};
use instance_delta::rng::CounterRng;
use instance_delta::store::{PredictionTensor, Provenance, SeedView, ValueKind};

/// Two sizes, P=2, F=1: one instance decays fully, one improves fully, the
/// rest are always right.
fn extreme_tensor(n: usize) -> PredictionTensor {
    let run = |small: bool, i: usize| -> f64 {
        match i {
            0 => small as u8 as f64,
            1 => !small as u8 as f64,
            _ => 1.0,
        }
    };
    let block = |small: bool| (0..2).flat_map(|_| (0..n).map(move |i| run(small, i))).collect::<Vec<_>>();
    PredictionTensor::new(
        ValueKind::Correctness,
        (0..n).map(|i| format!("inst{i:05}")).collect(),
        1,
        1,
        vec![("small".into(), 2, block(true)), ("large".into(), 2, block(false))],
    )
    .unwrap()
}

fn view(slices: Vec<Vec<f64>>) -> SeedView {
    SeedView::new("s", Provenance::FlattenAllRuns, slices).unwrap()
}

#[test]
fn extreme_pair_bound_and_exports() {
    let t = extreme_tensor(10_000);
    for mode in [ViewMode::NaiveFlatten, ViewMode::RigorousEnsemble] {
        let a = decay_analysis(&t, "small", "large", mode, SplitPolicy::Canonical).unwrap();
        assert_eq!(a.curve.lower_bound, 0.0001);
        assert_eq!(a.curve.t_star, -1.0);
        let ids = t.instance_ids();
        let one = export_decaying_instances(&a.observed, -1.0, ids).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].id, "inst00000");
        assert!(export_decaying_instances(&a.observed, -1.5, ids).unwrap().is_empty());
        assert!(export_decaying_instances(&a.observed, -3.0, ids).unwrap().is_empty());
        let nonpos = export_decaying_instances(&a.observed, 0.0, ids).unwrap();
        assert_eq!(nonpos.len(), 9_999);
        assert!(nonpos.iter().all(|d| d.delta <= 0.0));
        assert!(nonpos.iter().all(|d| d.id != "inst00001"));
        // ascending by difference, then identifier
        assert!(nonpos.windows(2).all(|w| (w[0].delta, &w[0].id) < (w[1].delta, &w[1].id)));
    }
}

#[test]
fn delta_is_accuracy_difference() {
    let v1 = view(vec![vec![1.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0]]);
    let v2 = view(vec![vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 1.0]]);
    let d = delta_acc_hat(&v1, &v2).unwrap();
    let (a1, a2) = (instance_accuracy(&v1), instance_accuracy(&v2));
    for i in 0..3 {
        assert!((d.value(i) - (a2.values[i] - a1.values[i])).abs() < 1e-15);
    }
    assert!(matches!(d.values, DeltaValues::Exact { denominator: 3, .. }));
}

#[test]
fn swapped_split_negates_baseline() {
    let mut rng = CounterRng::new(5);
    let mut slices = || (0..6).map(|_| (0..20).map(|_| rng.bernoulli(0.4) as u8 as f64).collect()).collect();
    let v1 = view(slices());
    let v2 = view(slices());
    let split = SplitSpec::canonical(6);
    let b = mixing_baseline(&v1, &v2, &split).unwrap();
    let s = mixing_baseline(&v1, &v2, &split.swapped(6)).unwrap();
    let (_, nb) = b.exact().unwrap();
    let (_, ns) = s.exact().unwrap();
    assert!(nb.iter().zip(ns).all(|(x, y)| *x == -*y));
}

/// Kolmogorov-Smirnov distance between the baseline numerator distributions
/// of the canonical split and a fresh random split per resample.
#[test]
fn canonical_split_matches_random_splits() {
    let k2 = 6;
    let resamples = 10_000;
    let rates = [0.3, 0.7];
    let root = CounterRng::new(17);
    let mut canon = vec![0usize; 2 * k2 + 1];
    let mut random = vec![0usize; 2 * k2 + 1];
    for r in 0..resamples {
        let mut rng = root.fork(r);
        let mut draw = |p: f64| view((0..k2).map(|_| vec![rng.bernoulli(p) as u8 as f64]).collect());
        let (v1, v2) = (draw(rates[0]), draw(rates[1]));
        let c = mixing_baseline(&v1, &v2, &SplitSpec::canonical(k2)).unwrap();
        let mut split_rng = root.fork(r).fork(99);
        let mut pick = || {
            let mut idx: Vec<usize> = (0..k2).collect();
            split_rng.shuffle(&mut idx);
            idx.truncate(k2 / 2);
            idx
        };
        let split = SplitSpec { group_a1: pick(), group_a2: pick() };
        let m = mixing_baseline(&v1, &v2, &split).unwrap();
        canon[(c.exact().unwrap().1[0] + k2 as i64) as usize] += 1;
        random[(m.exact().unwrap().1[0] + k2 as i64) as usize] += 1;
    }
    let (mut fc, mut fr, mut ks) = (0.0f64, 0.0f64, 0.0f64);
    for j in 0..canon.len() {
        fc += canon[j] as f64 / resamples as f64;
        fr += random[j] as f64 / resamples as f64;
        ks = ks.max((fc - fr).abs());
    }
    assert!(ks < 0.05, "KS distance {ks}");
}

/// Counting `<= t` directly over every grid point.
#[test]
fn curve_matches_brute_force_cdf() {
    let small = vec![1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0];
    let large = vec![0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
    let t = PredictionTensor::new(
        ValueKind::Correctness,
        vec!["a".into(), "b".into(), "c".into()],
        1,
        1,
        vec![("small".into(), 4, small.clone()), ("large".into(), 4, large.clone())],
    )
    .unwrap();
    let a = decay_analysis(&t, "small", "large", ViewMode::NaiveFlatten, SplitPolicy::Canonical).unwrap();
    let acc = |v: &[f64], i: usize, slices: &[usize]| slices.iter().map(|&j| v[j * 3 + i]).sum::<f64>();
    let obs: Vec<f64> = (0..3).map(|i| (acc(&large, i, &[0, 1, 2, 3]) - acc(&small, i, &[0, 1, 2, 3])) / 4.0).collect();
    // group A: first two slices of each size
    let base: Vec<f64> = (0..3)
        .map(|i| {
            (acc(&small, i, &[0, 1]) + acc(&large, i, &[0, 1]) - acc(&small, i, &[2, 3]) - acc(&large, i, &[2, 3])) / 4.0
        })
        .collect();
    assert_eq!(a.curve.denominator, 4);
    assert_eq!(a.curve.thresholds, vec![-1.0, -0.75, -0.5, -0.25, 0.0]);
    let mut best = (f64::NEG_INFINITY, 0);
    for (j, &th) in a.curve.thresholds.iter().enumerate() {
        let frac = |v: &[f64]| v.iter().filter(|&&x| x <= th).count() as f64 / 3.0;
        assert_eq!(a.curve.decay_hat[j], frac(&obs));
        assert_eq!(a.curve.decay_prime[j], frac(&base));
        let diff = frac(&obs) - frac(&base);
        assert!((a.curve.diff[j] - diff).abs() < 1e-15);
        if diff > best.0 {
            best = (diff, j);
        }
    }
    assert_eq!(a.curve.best_index, best.1);
    assert_eq!(a.curve.lower_bound, a.curve.diff[best.1]);
}

#[test]
fn curves_are_valid_cdfs() {
    let mut rng = CounterRng::new(23);
    let n = 40;
    let block = |rng: &mut CounterRng| (0..8 * n).map(|_| rng.bernoulli(0.6) as u8 as f64).collect::<Vec<_>>();
    let (b1, b2) = (block(&mut rng), block(&mut rng));
    let t = PredictionTensor::new(
        ValueKind::Correctness,
        (0..n).map(|i| i.to_string()).collect(),
        2,
        1,
        vec![("a".into(), 4, b1), ("b".into(), 4, b2)],
    )
    .unwrap();
    let a = decay_analysis(&t, "a", "b", ViewMode::NaiveFlatten, SplitPolicy::Random { count: 5, seed: 1 }).unwrap();
    for cdf in [&a.curve.decay_hat, &a.curve.decay_prime] {
        assert!(cdf.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
    }
    let nonpos = a.observed.to_f64().iter().filter(|&&x| x <= 0.0).count() as f64 / n as f64;
    assert_eq!(*a.curve.decay_hat.last().unwrap(), nonpos);
}

#[test]
fn self_comparison_is_a_null() {
    let mut rng = CounterRng::new(41);
    let n = 200;
    let vals: Vec<f64> = (0..10 * n).map(|_| rng.bernoulli(0.5) as u8 as f64).collect();
    let t = PredictionTensor::new(
        ValueKind::Correctness,
        (0..n).map(|i| i.to_string()).collect(),
        1,
        1,
        vec![("only".into(), 10, vals)],
    )
    .unwrap();
    // halves of 5 slices each, truncated to 4
    let (v1, v2) = paired_views(&t, "only", "only", ViewMode::NaiveFlatten).unwrap();
    assert_eq!((v1.slice_count(), v2.slice_count()), (4, 4));
    let a = decay_analysis(&t, "only", "only", ViewMode::NaiveFlatten, SplitPolicy::Canonical).unwrap();
    assert_eq!(a.slices_per_size, 4);
    assert!(a.curve.lower_bound < 0.1, "bound {}", a.curve.lower_bound);
}

#[test]
fn single_baseline_curve_equals_averaged_form() {
    let v1 = view(vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
    let v2 = view(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
    let obs = delta_acc_hat(&v1, &v2).unwrap();
    let base = mixing_baseline(&v1, &v2, &SplitSpec::canonical(2)).unwrap();
    let c = decay_curve(&obs, &base).unwrap();
    assert_eq!(c.splits, 1);
    assert_eq!(c.thresholds.len(), 3);
}
