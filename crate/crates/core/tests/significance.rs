use std::collections::BTreeSet;

use instance_delta::decay::{decay_lower_bound, SplitPolicy, ViewMode};
use instance_delta::lab::{generate, presets};
use instance_delta::par::Execution;
use instance_delta::rng::CounterRng;
use instance_delta::significance::{
    bh_adaptive, bh_lower_bound, classical_pipeline, default_q_grid, fisher_one_sided, instance_tables,
    ContingencyTable,
};
use instance_delta::store::{PredictionTensor, ValueKind};
use proptest::prelude::*;

fn binom_pmf(n: u64, p: f64) -> Vec<f64> {
    let mut c = 1.0f64;
    (0..=n)
        .map(|k| {
            if k > 0 {
                c *= (n - k + 1) as f64 / k as f64;
            }
            c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
        })
        .collect()
}

#[test]
fn fisher_is_super_uniform_under_the_null() {
    for n in 1..=5u64 {
        for &rate in &[0.05, 0.2, 0.5, 0.7, 0.95] {
            let pmf = binom_pmf(n, rate);
            // law of alpha under equal rates, from the product of the two binomials
            let mut law: Vec<(f64, f64)> = Vec::new();
            for a in 0..=n {
                for b in 0..=n {
                    let alpha = fisher_one_sided(ContingencyTable::new(a, n, b, n).unwrap());
                    law.push((alpha, pmf[a as usize] * pmf[b as usize]));
                }
            }
            law.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut mass = 0.0;
            for (k, &(u, w)) in law.iter().enumerate() {
                mass += w;
                let last_at_u = law.get(k + 1).is_none_or(|next| next.0 > u);
                if last_at_u {
                    assert!(mass <= u + 1e-12, "n={n} rate={rate}: P[alpha <= {u}] = {mass}");
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn bh_ignores_input_order(mut alphas in proptest::collection::vec(0.0001f64..=1.0, 1..60), q in 0.01f64..0.99, seed in any::<u64>()) {
        let before = bh_lower_bound(&alphas, q).unwrap();
        CounterRng::new(seed).shuffle(&mut alphas);
        let after = bh_lower_bound(&alphas, q).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn doubling_alphas_never_raises_p(alphas in proptest::collection::vec(0.0001f64..=1.0, 1..60), q in 0.01f64..0.99) {
        let doubled: Vec<f64> = alphas.iter().map(|a| (2.0 * a).min(1.0)).collect();
        prop_assert!(bh_lower_bound(&doubled, q).unwrap().p <= bh_lower_bound(&alphas, q).unwrap().p);
    }

    #[test]
    fn adaptive_dominates_each_rate(alphas in proptest::collection::vec(0.0001f64..=1.0, 1..60)) {
        let grid = default_q_grid();
        let best = bh_adaptive(&alphas, &grid).unwrap();
        for &q in &grid {
            prop_assert!(best.lower_bound >= bh_lower_bound(&alphas, q).unwrap().lower_bound);
        }
        let single = bh_adaptive(&alphas, &[0.3]).unwrap();
        prop_assert_eq!(single, bh_lower_bound(&alphas, 0.3).unwrap());
    }
}

#[test]
fn two_seed_alphas_lie_in_the_hypergeometric_support() {
    // every tail for two slices a side, by listing which of four slots are correct
    let mut support = BTreeSet::new();
    for a in 0..=2u64 {
        for b in 0..=2u64 {
            let k = a + b;
            let (mut hits, mut draws) = (0u32, 0u32);
            for mask in 0u32..16 {
                if mask.count_ones() != 2 {
                    continue;
                }
                draws += 1;
                let correct_a = (mask & ((1 << k) - 1)).count_ones() as u64;
                hits += (correct_a >= a) as u32;
            }
            support.insert((hits as f64 / draws as f64).to_bits());
        }
    }
    let mut rng = CounterRng::new(88);
    let n = 300;
    let block = |rng: &mut CounterRng| (0..2 * n).map(|_| rng.bernoulli(0.5) as u8 as f64).collect::<Vec<_>>();
    let t = PredictionTensor::new(
        ValueKind::Correctness,
        (0..n).map(|i| i.to_string()).collect(),
        1,
        1,
        vec![("small".into(), 2, block(&mut rng)), ("large".into(), 2, block(&mut rng))],
    )
    .unwrap();
    let tables = instance_tables(&t, "small", "large", ViewMode::RigorousEnsemble).unwrap();
    for table in tables {
        assert!(support.contains(&fisher_one_sided(table).to_bits()), "{table:?}");
    }
    let bh = classical_pipeline(&t, "small", "large", ViewMode::RigorousEnsemble, Execution::default()).unwrap();
    assert!(bh.min_alpha >= 1.0 / 6.0);
}

#[test]
fn always_correct_gives_no_discoveries() {
    let t = PredictionTensor::new(
        ValueKind::Correctness,
        vec!["a".into(), "b".into()],
        1,
        1,
        vec![("small".into(), 4, vec![1.0; 8]), ("large".into(), 4, vec![1.0; 8])],
    )
    .unwrap();
    let bh = classical_pipeline(&t, "small", "large", ViewMode::NaiveFlatten, Execution::Sequential).unwrap();
    assert_eq!(bh.lower_bound, 0.0);
    assert!(bh.sorted_alphas.iter().all(|&a| a == 1.0));
}

#[test]
fn classical_bound_is_weaker_on_average() {
    let config = presets::noisy_decay(200);
    let trials = 200;
    let (mut classical, mut decay) = (0.0, 0.0);
    for r in 0..trials {
        let t = generate(&config, 1000 + r).unwrap();
        classical += classical_pipeline(&t, "small", "large", ViewMode::RigorousEnsemble, Execution::default())
            .unwrap()
            .lower_bound;
        decay += decay_lower_bound(&t, "small", "large", ViewMode::RigorousEnsemble, SplitPolicy::Canonical)
            .unwrap()
            .lower_bound;
    }
    let (classical, decay) = (classical / trials as f64, decay / trials as f64);
    assert!(classical <= decay, "classical {classical} vs decay {decay}");
}
