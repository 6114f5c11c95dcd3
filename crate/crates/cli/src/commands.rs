use std::path::Path;

use log::{info, warn};
use serde::Serialize;

use dfpm::corpus::{
    ingest as run_ingest, read_datasets, read_documents, read_interactions, read_vocabulary, write_datasets,
    write_json_pretty, write_vectors_jsonl, write_vocabulary, DatasetBundle, IngestOptions, SplitRatios,
    TokenizerOptions,
};
use dfpm::evaluation::{
    evaluate_users, feature_names, macro_f1, paired_t_test, top_factor_features, top_items_per_cluster,
    ClusterItems, FactorReport, MetricsReport, Significance, Split,
};
use dfpm::models::{load_model, save_model, train_with_workers, FactorInit, Hyperparams, ModelState, Variant};
use dfpm::synthetic::{generate, MixingPrior, SyntheticConfig};

use crate::config::{or_default, required, RunConfig};
use crate::{CliError, EvaluateArgs, IngestArgs, InspectArgs, SynthArgs, TrainArgs};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Core(e.into()))
}

pub fn ingest(a: &IngestArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let documents = required(&a.documents, &cfg.documents, "documents")?;
    let interactions = required(&a.interactions, &cfg.interactions, "interactions")?;
    let out_dir = required(&a.out_dir, &cfg.out_dir, "out-dir")?;
    let defaults = IngestOptions::default();
    let ratios = SplitRatios {
        train: or_default(&a.train_ratio, &cfg.train_ratio, defaults.ratios.train),
        validation: or_default(&a.validation_ratio, &cfg.validation_ratio, defaults.ratios.validation),
        test: or_default(&a.test_ratio, &cfg.test_ratio, defaults.ratios.test),
    };
    let opts = IngestOptions {
        min_df: or_default(&a.min_df, &cfg.min_df, defaults.min_df),
        ratios,
        seed: or_default(&a.seed, &cfg.seed, defaults.seed),
        tokenizer: TokenizerOptions {
            stem: !(a.no_stem || cfg.no_stem.unwrap_or(false)),
            remove_stop_words: !(a.keep_stop_words || cfg.keep_stop_words.unwrap_or(false)),
        },
        bias: a.bias || cfg.bias.unwrap_or(false),
    };
    let docs = read_documents(&documents)?;
    let pairs = read_interactions(&interactions)?;
    let out = run_ingest(&docs, &pairs, &opts)?;
    let s = &out.summary;
    if s.skipped_users > 0 {
        warn!("skipped {} users with no usable positives", s.skipped_users);
    }
    if s.unknown_interactions > 0 {
        warn!("{} interactions name unknown documents", s.unknown_interactions);
    }
    create_dir(&out_dir)?;
    write_vocabulary(&out_dir.join("vocabulary.json"), &out.vocabulary)?;
    write_datasets(&out_dir.join("datasets.json"), &out.datasets)?;
    write_json_pretty(&out_dir.join("ingest_summary.json"), s)?;
    println!(
        "users {}  items {}  features {}  examples {}  (skipped users {}, undersized splits {})",
        s.users, s.items, s.features, s.examples, s.skipped_users, s.undersized_users
    );
    Ok(())
}

fn parse_variant(s: &str) -> Result<Variant, CliError> {
    s.parse().map_err(|e: dfpm::Error| usage(e.to_string()))
}

fn parse_init(s: &str) -> Result<FactorInit, CliError> {
    match s.replace('_', "-").as_str() {
        "gaussian" => Ok(FactorInit::Gaussian),
        "l2lr-profiles" => Ok(FactorInit::L2lrProfiles),
        "l2lr-spread" => Ok(FactorInit::L2lrSpread),
        other => Err(usage(format!(
            "unknown init {other:?} (expected gaussian, l2lr-profiles or l2lr-spread)"
        ))),
    }
}

#[derive(Debug, Serialize)]
struct GridPoint {
    h: usize,
    c1: f64,
    c2: f64,
    c3: f64,
    validation_macro_f1: f64,
}

#[derive(Debug, Serialize)]
struct TuningReport {
    variant: Variant,
    selected: usize,
    points: Vec<GridPoint>,
}

fn validation_macro_f1(state: &ModelState, data: &DatasetBundle) -> Result<f64, CliError> {
    let users = evaluate_users(state, &data.users, Split::Validation)?;
    if users.is_empty() {
        return Err(CliError::Core(dfpm::Error::InvalidArgument(
            "tuning needs validation examples, but every validation split is empty".into(),
        )));
    }
    Ok(macro_f1(&users)?)
}

pub fn train(a: &TrainArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let data_path = required(&a.data, &cfg.data, "data")?;
    let model_path = required(&a.model, &cfg.model, "model")?;
    let variant = parse_variant(&or_default(&a.variant, &cfg.variant, "dfpm-mult".to_string()))?;
    let workers = or_default(&a.workers, &cfg.workers, 1);
    if workers < 1 {
        return Err(usage("--workers must be >= 1"));
    }
    let d = Hyperparams::default();
    let base = Hyperparams {
        h: or_default(&a.h_factors, &cfg.h_factors, d.h),
        c1: or_default(&a.c1, &cfg.c1, d.c1),
        c2: or_default(&a.c2, &cfg.c2, d.c2),
        c3: or_default(&a.c3, &cfg.c3, d.c3),
        max_outer_iters: or_default(&a.max_outer_iters, &cfg.max_outer_iters, d.max_outer_iters),
        max_inner_iters: or_default(&a.max_inner_iters, &cfg.max_inner_iters, d.max_inner_iters),
        outer_rel_tolerance: or_default(&a.tol, &cfg.tol, d.outer_rel_tolerance),
        seed: or_default(&a.seed, &cfg.seed, d.seed),
        init: match a.init.as_ref().or(cfg.init.as_ref()) {
            Some(s) => parse_init(s)?,
            None => d.init,
        },
        init_scale: or_default(&a.init_scale, &cfg.init_scale, d.init_scale),
        solver: d.solver,
    };
    let grid_h = or_default(&a.grid_h, &cfg.grid_h, vec![base.h]);
    let grid_c1 = or_default(&a.grid_c1, &cfg.grid_c1, vec![base.c1]);
    let grid_c2 = or_default(&a.grid_c2, &cfg.grid_c2, vec![base.c2]);
    let grid_c3 = or_default(&a.grid_c3, &cfg.grid_c3, vec![base.c3]);
    let mut grid = Vec::new();
    for &h in &grid_h {
        for &c1 in &grid_c1 {
            for &c2 in &grid_c2 {
                for &c3 in &grid_c3 {
                    let hyper = Hyperparams { h, c1, c2, c3, ..base.clone() };
                    hyper.validate(variant).map_err(|e| usage(e.to_string()))?;
                    grid.push(hyper);
                }
            }
        }
    }
    if grid.is_empty() {
        return Err(usage("tuning grid is empty"));
    }

    let data = read_datasets(&data_path)?;
    if data.users.is_empty() {
        return Err(CliError::Core(dfpm::Error::Parse {
            path: data_path.display().to_string(),
            line: 0,
            message: "dataset has no users".into(),
        }));
    }
    let (state, report) = if grid.len() == 1 {
        (train_with_workers(&data, &grid[0], variant, workers)?, None)
    } else {
        let mut best: Option<(f64, usize, ModelState)> = None;
        let mut points = Vec::new();
        for (i, hyper) in grid.iter().enumerate() {
            let state = train_with_workers(&data, hyper, variant, workers)?;
            let score = validation_macro_f1(&state, &data)?;
            info!("grid point {i}: H={} c1={} c2={} c3={} validation macro-F1 {score:.4}", hyper.h, hyper.c1, hyper.c2, hyper.c3);
            println!(
                "grid H={} c1={} c2={} c3={}: validation macro-F1 {score:.4}",
                hyper.h, hyper.c1, hyper.c2, hyper.c3
            );
            points.push(GridPoint {
                h: hyper.h,
                c1: hyper.c1,
                c2: hyper.c2,
                c3: hyper.c3,
                validation_macro_f1: score,
            });
            // Strictly better only, so ties keep the earliest grid point.
            if best.as_ref().map_or(true, |(s, _, _)| score > *s) {
                best = Some((score, i, state));
            }
        }
        let (_, selected, state) = best.expect("non-empty grid");
        (state, Some(TuningReport { variant, selected, points }))
    };
    save_model(&model_path, &state)?;
    if let Some(report) = report {
        if let Some(path) = a.report.as_ref().or(cfg.report.as_ref()) {
            write_json_pretty(path, &report)?;
        }
        let p = &report.points[report.selected];
        println!("selected H={} c1={} c2={} c3={}", p.h, p.c1, p.c2, p.c3);
    }
    println!(
        "{}: {} users, {} outer iterations, final objective {:.6}",
        state.variant,
        state.profiles.len(),
        state.objective_trace.len(),
        state.objective_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn parse_split(s: &str) -> Result<Split, CliError> {
    match s {
        "train" => Ok(Split::Train),
        "validation" => Ok(Split::Validation),
        "test" => Ok(Split::Test),
        other => Err(usage(format!("unknown split {other:?} (expected train, validation or test)"))),
    }
}

pub fn evaluate(a: &EvaluateArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let data_path = required(&a.data, &cfg.data, "data")?;
    let model_path = required(&a.model, &cfg.model, "model")?;
    let report_path = required(&a.report, &cfg.report, "report")?;
    let split = parse_split(&a.split)?;
    let data = read_datasets(&data_path)?;
    let model = load_model(&model_path)?;
    model.check_fingerprint(&data.vocab_fingerprint)?;
    let users = evaluate_users(&model, &data.users, split)?;
    let mut report = MetricsReport::new(users)?;
    if let Some(other_path) = a.compare.as_ref().or(cfg.compare.as_ref()) {
        let other = load_model(other_path)?;
        other.check_fingerprint(&data.vocab_fingerprint)?;
        let theirs = evaluate_users(&other, &data.users, split)?;
        let mine: Vec<f64> = report.users.iter().map(|u| u.f1).collect();
        let theirs: Vec<f64> = theirs.iter().map(|u| u.f1).collect();
        report.significance = Some(Significance {
            baseline: other_path.display().to_string(),
            test: paired_t_test(&mine, &theirs)?,
        });
    }
    write_json_pretty(&report_path, &report)?;
    let o = &report.overall;
    println!(
        "{} on {:?}: {} users  precision {:.4}  recall {:.4}  macro-F1 {:.4}",
        model.variant, split, o.users, o.precision, o.recall, o.macro_f1
    );
    for g in report.groups.iter().filter(|g| g.users > 0) {
        println!("  {:>8}: {:>5} users  macro-F1 {:.4}", g.label, g.users, g.macro_f1);
    }
    if let Some(s) = &report.significance {
        println!("  vs {}: t = {}  p = {:.4}", s.baseline, s.test.t, s.test.p);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct FactorBlock {
    factor: usize,
    terms: FactorReport,
}

#[derive(Debug, Serialize)]
struct InspectReport {
    variant: Variant,
    factors: Vec<FactorBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cluster_sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clusters: Option<Vec<ClusterItems>>,
}

pub fn inspect(a: &InspectArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let model_path = required(&a.model, &cfg.model, "model")?;
    let report_path = required(&a.report, &cfg.report, "report")?;
    let top_n = or_default(&a.top_n, &cfg.top_n, 20);
    let top_items = or_default(&a.top_items, &cfg.top_items, 10);
    let model = load_model(&model_path)?;
    let Some(factors) = model.factors.as_ref() else {
        return Err(usage(format!("{} model has no factors to inspect", model.variant)));
    };
    let vocab = match a.vocabulary.as_ref().or(cfg.vocabulary.as_ref()) {
        Some(p) => {
            let v = read_vocabulary(p)?;
            model.check_fingerprint(&v.fingerprint())?;
            Some(v)
        }
        None => None,
    };
    let names = feature_names(vocab.as_ref(), factors.num_features())?;
    let blocks: Vec<FactorBlock> = top_factor_features(factors, &names, top_n)?
        .into_iter()
        .enumerate()
        .map(|(factor, terms)| FactorBlock { factor, terms })
        .collect();
    let clusters = match (model.variant, a.data.as_ref().or(cfg.data.as_ref())) {
        (Variant::DfpmMult | Variant::Bhlr, Some(p)) => {
            let data = read_datasets(p)?;
            model.check_fingerprint(&data.vocab_fingerprint)?;
            let mut c = top_items_per_cluster(&model, &data.users)?;
            for block in &mut c {
                block.items.truncate(top_items);
            }
            Some(c)
        }
        _ => None,
    };
    let report = InspectReport {
        variant: model.variant,
        factors: blocks,
        cluster_sizes: model.cluster_sizes(),
        clusters,
    };
    write_json_pretty(&report_path, &report)?;
    for b in &report.factors {
        let sizes = report.cluster_sizes.as_ref().map(|s| format!(" ({} users)", s[b.factor])).unwrap_or_default();
        let terms: Vec<&str> = b.terms.iter().take(8).map(|t| t.term.as_str()).collect();
        println!("factor {}{sizes}: {}", b.factor, terms.join(" "));
    }
    Ok(())
}

fn parse_prior(s: &str) -> Result<MixingPrior, CliError> {
    match s {
        "mult" => Ok(MixingPrior::Mult),
        "norm" => Ok(MixingPrior::Norm),
        other => Err(usage(format!("unknown prior {other:?} (expected mult or norm)"))),
    }
}

pub fn synth(a: &SynthArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let out_dir = required(&a.out_dir, &cfg.out_dir, "out-dir")?;
    let d = SyntheticConfig::default();
    let config = SyntheticConfig {
        m: or_default(&a.users, &cfg.users, d.m),
        k: or_default(&a.features, &cfg.features, d.k),
        h_true: or_default(&a.h_true, &cfg.h_true, d.h_true),
        j: or_default(&a.examples_per_user, &cfg.examples_per_user, d.j),
        held_out: or_default(&a.held_out, &cfg.held_out, d.held_out),
        factor_scale: or_default(&a.factor_scale, &cfg.factor_scale, d.factor_scale),
        lambda_scale: or_default(&a.lambda_scale, &cfg.lambda_scale, d.lambda_scale),
        profile_noise: or_default(&a.profile_noise, &cfg.profile_noise, d.profile_noise),
        feature_density: or_default(&a.feature_density, &cfg.feature_density, d.feature_density),
        variant: match a.prior.as_ref().or(cfg.prior.as_ref()) {
            Some(s) => parse_prior(s)?,
            None => d.variant,
        },
        seed: or_default(&a.seed, &cfg.seed, d.seed),
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let (bundle, truth) = generate(&config)?;
    create_dir(&out_dir)?;
    write_datasets(&out_dir.join("datasets.json"), &bundle)?;
    write_vectors_jsonl(&out_dir.join("vectors.jsonl"), &bundle)?;
    write_json_pretty(&out_dir.join("ground_truth.json"), &truth)?;
    write_json_pretty(&out_dir.join("synth_config.json"), &config)?;
    let examples: usize = bundle.users.iter().map(|u| u.all_examples().count()).sum();
    println!(
        "users {}  features {}  factors {}  examples {}",
        config.m, config.k, config.h_true, examples
    );
    Ok(())
}
