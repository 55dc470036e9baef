use instance_delta::lab::{generate, point_config};
use instance_delta::rng::CounterRng;
use instance_delta::store::{PredictionTensor, ValueKind};
use instance_delta::variance::{
    ckptvar, decompose, decompose_tree, finevar, pretvar, LossKind, RandomnessTree,
};
use rand_distr::{Beta, Distribution};

fn random_bits(rng: &mut CounterRng, len: usize, p: f64) -> Vec<f64> {
    (0..len).map(|_| rng.bernoulli(p) as u8 as f64).collect()
}

#[test]
fn depth_two_tree_is_pretvar_and_finevar() {
    let (p, f) = (5, 4);
    let mut rng = CounterRng::new(3);
    for _ in 0..50 {
        let leaves = random_bits(&mut rng, p * f, 0.4);
        let t = PredictionTensor::new(ValueKind::Correctness, vec!["x".into()], f, 1, vec![("s".into(), p, leaves.clone())]).unwrap();
        let tree = RandomnessTree::from_dense(vec![p, f], leaves).unwrap();
        assert_eq!(decompose_tree(&tree, 1).unwrap(), pretvar(&t, "s").unwrap()[0]);
        assert_eq!(decompose_tree(&tree, 2).unwrap(), finevar(&t, "s").unwrap()[0]);
    }
}

#[test]
fn depth_three_tree_matches_checkpoint_components() {
    let (p, f, e) = (3, 3, 4);
    let mut rng = CounterRng::new(4);
    for _ in 0..50 {
        let leaves = random_bits(&mut rng, p * f * e, 0.6);
        let t = PredictionTensor::new(ValueKind::Correctness, vec!["x".into()], f, e, vec![("s".into(), p, leaves.clone())]).unwrap();
        let tree = RandomnessTree::from_dense(vec![p, f, e], leaves).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-14;
        assert!(close(decompose_tree(&tree, 1).unwrap(), pretvar(&t, "s").unwrap()[0]));
        assert!(close(decompose_tree(&tree, 2).unwrap(), finevar(&t, "s").unwrap()[0]));
        assert!(close(decompose_tree(&tree, 3).unwrap(), ckptvar(&t, "s").unwrap()[0]));
    }
}

/// q1 ~ Beta(2, 2), each deeper rate ~ Beta(k q, k (1 - q)) with k = 4,
/// leaves Bernoulli. By the law of total variance the levels carry
/// 0.05, 0.2/5, 0.16/5 and 0.16 * 4/5.
#[test]
fn depth_four_beta_tree_is_unbiased() {
    let kappa = 4.0;
    let branching = vec![3, 3, 3, 3];
    let truth = [0.05, 0.04, 0.032, 0.128];
    let trials = 20_000u64;
    let root = CounterRng::new(2024);
    let top = Beta::new(2.0, 2.0).unwrap();
    let mut sums = [0.0f64; 4];
    let mut squares = [0.0f64; 4];
    for r in 0..trials {
        let mut rng = root.fork(r);
        let mut rates: Vec<f64> = (0..branching[0]).map(|_| top.sample(&mut rng)).collect();
        for &b in &branching[1..3] {
            let mut next = Vec::with_capacity(rates.len() * b);
            for &q in &rates {
                // the law collapses to a point mass at a boundary
                let law = Beta::new(kappa * q, kappa * (1.0 - q)).ok();
                for _ in 0..b {
                    next.push(law.map_or(q, |l| l.sample(&mut rng)));
                }
            }
            rates = next;
        }
        let mut leaves = Vec::with_capacity(rates.len() * branching[3]);
        for &q in &rates {
            for _ in 0..branching[3] {
                leaves.push(rng.bernoulli(q) as u8 as f64);
            }
        }
        let tree = RandomnessTree::from_dense(branching.clone(), leaves).unwrap();
        for level in 1..=4 {
            let v = decompose_tree(&tree, level).unwrap();
            sums[level - 1] += v;
            squares[level - 1] += v * v;
        }
    }
    let n = trials as f64;
    for level in 0..4 {
        let mean = sums[level] / n;
        let se = ((squares[level] / n - mean * mean) / (n - 1.0)).sqrt();
        assert!(
            (mean - truth[level]).abs() <= 3.0 * se,
            "level {}: mean {mean} truth {} se {se}",
            level + 1,
            truth[level]
        );
    }
}

#[test]
fn components_ignore_seed_order() {
    let (p, f, n) = (4, 3, 10);
    let mut rng = CounterRng::new(9);
    let values = random_bits(&mut rng, p * f * n, 0.5);
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let t = PredictionTensor::new(ValueKind::Correctness, ids.clone(), f, 1, vec![("s".into(), p, values.clone())]).unwrap();
    // reverse pretraining seeds and rotate finetune seeds within each
    let mut permuted = vec![0.0; values.len()];
    for pp in 0..p {
        for ff in 0..f {
            let (np, nf) = (p - 1 - pp, (ff + 1) % f);
            for i in 0..n {
                permuted[(np * f + nf) * n + i] = values[(pp * f + ff) * n + i];
            }
        }
    }
    let u = PredictionTensor::new(ValueKind::Correctness, ids, f, 1, vec![("s".into(), p, permuted)]).unwrap();
    let (a, b) = (decompose(&t, "s", LossKind::ZeroOne).unwrap(), decompose(&u, "s", LossKind::ZeroOne).unwrap());
    for i in 0..n {
        for (x, y) in [(a.pretvar[i], b.pretvar[i]), (a.finevar[i], b.finevar[i]), (a.bias2[i], b.bias2[i])] {
            assert!((x - y).abs() <= 1e-14, "{x} vs {y}");
        }
        assert_eq!(a.loss[i], b.loss[i]);
    }
}

/// With no pretraining randomness the estimator is centred on zero, which
/// needs negative estimates to be kept.
#[test]
fn pretvar_is_not_clamped() {
    let config = point_config(&["s"], &[("a", 0.5, &[0.3]), ("b", 0.5, &[0.6])], (4, 3, 1, 400));
    let trials = 300u64;
    let (mut sum, mut square, mut negative) = (0.0, 0.0, 0usize);
    for r in 0..trials {
        let t = generate(&config, r).unwrap();
        let pv = pretvar(&t, "s").unwrap();
        negative += pv.iter().filter(|&&v| v < 0.0).count();
        let m = pv.iter().sum::<f64>() / pv.len() as f64;
        sum += m;
        square += m * m;
    }
    let n = trials as f64;
    let mean = sum / n;
    let se = ((square / n - mean * mean) / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * se, "mean {mean} se {se}");
    assert!(negative > 0);
}

#[test]
fn squared_loss_adds_up() {
    let (p, f, n) = (3, 2, 25);
    let mut rng = CounterRng::new(12);
    let values: Vec<f64> = (0..p * f * n).map(|_| rng.uniform()).collect();
    let t = PredictionTensor::new(ValueKind::Probability, (0..n).map(|i| i.to_string()).collect(), f, 1, vec![("s".into(), p, values)]).unwrap();
    let d = decompose(&t, "s", LossKind::SquaredProbability).unwrap();
    for i in 0..n {
        assert_eq!(d.total(i), d.loss[i]);
    }
    assert!(d.ckptvar.is_none());
}
