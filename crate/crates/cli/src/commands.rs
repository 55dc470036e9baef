use std::path::Path;

use anyhow::{bail, Context, Result};
use instance_delta::correlation::{
    conditional_variance_curve, momentum, unit_grid, Component, GpOptions,
};
use instance_delta::decay::{
    bootstrap_threshold_bias, decay_analysis, export_decaying_instances, SplitPolicy, ViewMode,
};
use instance_delta::lab::certify::{certify_all, report_json, Profile};
use instance_delta::lab::{analytic_truth, generate, GenerativeConfig};
use instance_delta::par::Execution;
use instance_delta::significance::{bh_adaptive, default_q_grid, fisher_one_sided, instance_tables};
use instance_delta::store::{read_csv, write_csv, CheckpointPolicy, CsvSchema, Manifest, PredictionTensor};
use instance_delta::variance::{decompose_with, ComponentMeans, LossKind};
use serde::Serialize;

use crate::report::{csv_field, AnalysisReport, Fingerprint, Output};
use crate::svg::cdf_plot;
use crate::{Checkpoints, Command, Common, ComponentArg, Loss, PairArgs};

fn load(path: &Path, report: &mut AnalysisReport) -> Result<PredictionTensor> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    report.inputs.push(Fingerprint::of(path, &bytes));
    let is_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let tensor = if is_json {
        serde_json::from_slice::<Manifest>(&bytes)?.into_tensor()?
    } else {
        read_csv(bytes.as_slice(), &CsvSchema::default())?
    };
    Ok(tensor)
}

fn describe(tensor: &PredictionTensor) -> serde_json::Value {
    let sizes: Vec<_> = tensor
        .sizes()
        .iter()
        .map(|b| serde_json::json!({"label": b.label, "pretrain_seeds": b.pretrain_seed_ids.len()}))
        .collect();
    serde_json::json!({
        "value_kind": tensor.value_kind().name(),
        "sizes": sizes,
        "finetune_seeds": tensor.finetune_seeds(),
        "checkpoints": tensor.checkpoints(),
        "instances": tensor.instances(),
    })
}

fn loss_kind(loss: Loss) -> LossKind {
    match loss {
        Loss::ZeroOne => LossKind::ZeroOne,
        Loss::Squared => LossKind::SquaredProbability,
    }
}

fn policy(c: Checkpoints) -> CheckpointPolicy {
    match c {
        Checkpoints::All => CheckpointPolicy::All,
        Checkpoints::Last => CheckpointPolicy::Last,
    }
}

fn pair_params(report: &mut AnalysisReport, pair: &PairArgs) {
    report.param("s1", &pair.s1);
    report.param("s2", &pair.s2);
    report.param("mode", ViewMode::from(pair.mode));
}

/// Run one subcommand. `Ok(false)` means it ran but a check failed.
pub fn run(command: Command, common: &Common) -> Result<bool> {
    let out = Output::new(common.out_dir.clone(), common.format)?;
    let exec = Execution::default();
    match command {
        Command::Ingest { input } => {
            let mut report = AnalysisReport::new("ingest");
            let tensor = load(&input, &mut report)?;
            let shape = describe(&tensor);
            println!("{}", serde_json::to_string_pretty(&shape)?);
            report.result("tensor", shape);
            out.write(&mut report, "tensor.json", &serde_json::to_string(&Manifest::from_tensor(&tensor))?)?;
            out.finish(&mut report)?;
        }
        Command::Decay { pair, splits, plot, export } => {
            let mut report = AnalysisReport::new("decay");
            let tensor = load(&pair.input, &mut report)?;
            pair_params(&mut report, &pair);
            report.param("splits", splits);
            report.param("seed", common.seed);
            let split_policy = match splits {
                0 => bail!("--splits must be at least 1"),
                1 => SplitPolicy::Canonical,
                count => SplitPolicy::Random { count, seed: common.seed },
            };
            let a = decay_analysis(&tensor, &pair.s1, &pair.s2, pair.mode.into(), split_policy)?;
            let c = &a.curve;
            println!("lower_bound {}", c.lower_bound);
            println!("t_star {}", c.t_star);
            println!("slices_per_size {}", a.slices_per_size);
            report.result("lower_bound", c.lower_bound);
            report.result("t_star", c.t_star);
            report.result("slices_per_size", a.slices_per_size);
            out.table(&mut report, "decay_curve", || c.to_csv(), c)?;
            if plot {
                out.write(&mut report, "decay_cdf.svg", &cdf_plot(c))?;
            }
            if let Some(t) = export {
                report.param("export", t);
                let listing = export_decaying_instances(&a.observed, t, tensor.instance_ids())?;
                println!("decaying_instances {}", listing.len());
                report.result("decaying_instances", listing.len());
                let csv = || {
                    let mut s = String::from("instance_id,delta\n");
                    for d in &listing {
                        s.push_str(&format!("{},{}\n", csv_field(&d.id), d.delta));
                    }
                    s
                };
                out.table(&mut report, "decaying_instances", csv, &listing)?;
            }
            out.finish(&mut report)?;
        }
        Command::Significance { pair } => {
            let mut report = AnalysisReport::new("significance");
            let tensor = load(&pair.input, &mut report)?;
            pair_params(&mut report, &pair);
            let tables = instance_tables(&tensor, &pair.s1, &pair.s2, pair.mode.into())?;
            let alphas: Vec<f64> = tables.iter().map(|&t| fisher_one_sided(t)).collect();
            let bh = bh_adaptive(&alphas, &default_q_grid())?;
            println!("lower_bound {}", bh.lower_bound);
            println!("q {}", bh.q);
            println!("discoveries {}", bh.discoveries);
            println!("min_alpha {}", bh.min_alpha);
            report.result("bh", &bh);
            #[derive(Serialize)]
            struct Row<'a> {
                instance_id: &'a str,
                a: u64,
                n1: u64,
                b: u64,
                n2: u64,
                alpha: f64,
            }
            let rows: Vec<Row> = tables
                .iter()
                .zip(&alphas)
                .zip(tensor.instance_ids())
                .map(|((t, &alpha), id)| Row { instance_id: id, a: t.a, n1: t.n1, b: t.b, n2: t.n2, alpha })
                .collect();
            let csv = || {
                let mut s = String::from("instance_id,a,n1,b,n2,alpha\n");
                for r in &rows {
                    s.push_str(&format!("{},{},{},{},{},{}\n", csv_field(r.instance_id), r.a, r.n1, r.b, r.n2, r.alpha));
                }
                s
            };
            out.table(&mut report, "fisher_alphas", csv, &rows)?;
            out.finish(&mut report)?;
        }
        Command::Variance { input, size, loss, checkpoints, clamp_negative } => {
            let mut report = AnalysisReport::new("variance");
            let tensor = load(&input, &mut report)?;
            let sizes = if size.is_empty() { tensor.size_labels().map(String::from).collect() } else { size };
            report.param("sizes", &sizes);
            report.param("loss", loss_kind(loss));
            report.param("checkpoints", policy(checkpoints));
            report.param("clamp_negative", clamp_negative);
            let mut aggregates: Vec<(String, ComponentMeans)> = Vec::new();
            for s in &sizes {
                let d = decompose_with(&tensor, s, loss_kind(loss), policy(checkpoints))?;
                out.table(&mut report, &format!("variance_{s}"), || d.to_csv(), &d)?;
                aggregates.push((s.clone(), d.aggregate));
            }
            let three_level = aggregates.iter().any(|(_, a)| a.ckptvar.is_some());
            let shown = |v: f64| if clamp_negative { v.max(0.0) } else { v };
            let mut header = String::from("size,loss,bias2,pretvar,finevar");
            if three_level {
                header.push_str(",ckptvar");
            }
            let mut table = header.clone() + "\n";
            for (s, a) in &aggregates {
                let mut row = format!("{},{},{},{},{}", csv_field(s), a.loss, a.bias2, shown(a.pretvar), shown(a.finevar));
                if three_level {
                    row.push(',');
                    row.push_str(&a.ckptvar.map_or(String::new(), |v| shown(v).to_string()));
                }
                table.push_str(&row);
                table.push('\n');
            }
            print!("{table}");
            report.result("aggregate", aggregates.iter().cloned().collect::<std::collections::BTreeMap<_, _>>());
            let shown_rows: Vec<_> = aggregates
                .iter()
                .map(|(s, a)| {
                    serde_json::json!({
                        "size": s, "loss": a.loss, "bias2": a.bias2,
                        "pretvar": shown(a.pretvar), "finevar": shown(a.finevar),
                        "ckptvar": a.ckptvar.map(shown),
                    })
                })
                .collect();
            out.table(&mut report, "variance_aggregate", || table.clone(), &shown_rows)?;
            out.finish(&mut report)?;
        }
        Command::Momentum { input, s1, s2, s3, mode } => {
            let mut report = AnalysisReport::new("momentum");
            let tensor = load(&input, &mut report)?;
            report.param("sizes", [&s1, &s2, &s3]);
            report.param("mode", ViewMode::from(mode));
            let m = momentum(&tensor, &s1, &s2, &s3, mode.into())?;
            print!("{}", m.to_csv());
            report.result("momentum", &m);
            out.table(&mut report, "momentum", || m.to_csv(), &m)?;
            out.finish(&mut report)?;
        }
        Command::Condvar { input, size, component, loss, grid, max_points, pinned_noise } => {
            let mut report = AnalysisReport::new("condvar");
            let tensor = load(&input, &mut report)?;
            let component = match component {
                ComponentArg::Pretvar => Component::Pretvar,
                ComponentArg::Finevar => Component::Finevar,
            };
            report.param("size", &size);
            report.param("component", component);
            report.param("loss", loss_kind(loss));
            report.param("grid", grid);
            report.param("max_points", max_points);
            report.param("pinned_noise", pinned_noise);
            report.param("seed", common.seed);
            let d = decompose_with(&tensor, &size, loss_kind(loss), CheckpointPolicy::All)?;
            let options = GpOptions { pinned_noise, max_points, subsample_seed: common.seed };
            let curve = conditional_variance_curve(&d, component, &unit_grid(grid), &options)?;
            print!("{}", curve.to_csv());
            report.result("hyperparameters", curve.hyperparameters);
            report.result("log_marginal_likelihood", curve.log_marginal_likelihood);
            report.result("degenerate", curve.degenerate);
            report.result("points_used", curve.points_used);
            out.table(&mut report, "condvar", || curve.to_csv(), &curve)?;
            out.finish(&mut report)?;
        }
        Command::Bootstrap { input, s1, s2, replicates } => {
            let mut report = AnalysisReport::new("bootstrap");
            let tensor = load(&input, &mut report)?;
            report.param("s1", &s1);
            report.param("s2", &s2);
            report.param("replicates", replicates);
            report.param("seed", common.seed);
            let b = bootstrap_threshold_bias(&tensor, &s1, &s2, replicates, common.seed, exec)?;
            let rel = b.relative_bias.map_or_else(|| "undefined".to_string(), |v| v.to_string());
            println!("mean_l_star {}", b.mean_l_star);
            println!("mean_l {}", b.mean_l);
            println!("relative_bias {rel}");
            println!("degenerate_replicates {}", b.degenerate_replicates);
            report.result("mean_l_star", b.mean_l_star);
            report.result("mean_l", b.mean_l);
            report.result("relative_bias", b.relative_bias);
            report.result("degenerate_replicates", b.degenerate_replicates);
            let csv = || {
                let mut s = String::from("replicate,l_star,l,t_star_dev,degenerate\n");
                for (r, rep) in b.per_replicate.iter().enumerate() {
                    s.push_str(&format!("{r},{},{},{},{}\n", rep.l_star, rep.l, rep.t_star_dev, rep.degenerate));
                }
                s
            };
            out.table(&mut report, "bootstrap", csv, &b)?;
            out.finish(&mut report)?;
        }
        Command::Simulate { config } => {
            let mut report = AnalysisReport::new("simulate");
            let bytes = std::fs::read(&config).with_context(|| format!("reading {}", config.display()))?;
            report.inputs.push(Fingerprint::of(&config, &bytes));
            let cfg = GenerativeConfig::from_json(std::str::from_utf8(&bytes).context("config is not UTF-8")?)?;
            report.param("config", &cfg);
            report.param("seed", common.seed);
            let tensor = generate(&cfg, common.seed)?;
            let truth = analytic_truth(&cfg)?;
            let shape = describe(&tensor);
            println!("{}", serde_json::to_string_pretty(&shape)?);
            report.result("tensor", shape);
            if out.enabled() {
                let text = match out.format {
                    crate::report::Format::Csv => {
                        let mut buf = Vec::new();
                        write_csv(&tensor, &mut buf)?;
                        String::from_utf8(buf).expect("CSV output is UTF-8")
                    }
                    crate::report::Format::Json => serde_json::to_string(&Manifest::from_tensor(&tensor))?,
                };
                out.write(&mut report, &format!("tensor.{}", out.format.extension()), &text)?;
                out.write(&mut report, "truth.json", &(serde_json::to_string_pretty(&truth)? + "\n"))?;
            }
            out.finish(&mut report)?;
        }
        Command::Verify { quick } => {
            let profile = if quick { Profile::quick() } else { Profile::full() };
            let cert = certify_all(common.seed, &profile);
            for c in &cert.criteria {
                println!("{}", c.line());
            }
            let passed = cert.criteria.iter().filter(|c| c.passed).count();
            println!("{passed} of {} criteria passed", cert.criteria.len());
            if let Some(dir) = &common.out_dir {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("report.json"), report_json(&cert) + "\n")?;
            }
            return Ok(cert.passed);
        }
    }
    Ok(true)
}
