//! Acceptance suite. Runs every criterion at full scale and prints one
//! line per criterion; exits nonzero if any fails.
//!
//! `ACCEPTANCE_SEED` overrides the master seed.

use std::process::ExitCode;
use std::time::Instant;

use instance_delta::lab::certify::{self, CriterionReport, Profile};

fn main() -> ExitCode {
    let seed = std::env::var("ACCEPTANCE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(20_240_601);
    let p = Profile::full();
    let runs: Vec<Box<dyn Fn() -> CriterionReport + '_>> = vec![
        Box::new(|| certify::c1_lower_bound_validity(seed, &p)),
        Box::new(certify::c2_exact_dominance),
        Box::new(|| certify::c3_counterexample(seed, &p)),
        Box::new(|| certify::c4_extreme_pair(seed)),
        Box::new(|| certify::c5_unbiased_components(seed, &p)),
        Box::new(|| certify::c6_additivity(seed, &p)),
        Box::new(|| certify::c7_fisher_and_bh(&p)),
        Box::new(|| certify::c8_threshold_bias(seed, &p)),
        Box::new(|| certify::c9_momentum_and_gp(seed)),
        Box::new(|| certify::c10_determinism(seed)),
    ];
    println!("acceptance: seed {seed}, profile {}", p.name);
    let mut failed = 0;
    for run in &runs {
        let start = Instant::now();
        let report = run();
        println!("{}  [{:.1}s]", report.line(), start.elapsed().as_secs_f64());
        for (k, v) in &report.metrics {
            println!("    {k} = {v}");
        }
        for n in &report.notes {
            println!("    note: {n}");
        }
        if !report.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
