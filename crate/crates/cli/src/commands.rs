use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use heartcbr::analytics::true_labels;
use heartcbr::baselines::{train_mlp, write_epoch_log};
use heartcbr::dataset::ParsedDataset;
use heartcbr::engine::run_cycle;
use heartcbr::{
    dataset_stats, evaluate_parallel, fit_minmax, parse_csv, pearson_correlation, read_case_base,
    split_sequential, validate_case, write_case_base, write_cases, Case, CaseBase, CaseId,
    EvaluationReport, NormalizationParams, SimilarityConfig, SplitResult, Target, ValidationMode,
};
use serde::{Deserialize, Serialize};

use crate::{CorrelateArgs, EvalArgs, InputArgs, PredictArgs, SplitArgs, SplitOpts, TrainNnArgs};

pub const TRAIN_CSV: &str = "train.csv";
pub const TEST_CSV: &str = "test.csv";
pub const CASE_BASE_CSV: &str = "case_base.csv";
pub const MANIFEST_JSON: &str = "split_manifest.json";
pub const REPORT_JSON: &str = "report.json";
pub const PREDICTIONS_CSV: &str = "predictions.csv";
pub const REPORT_INCREMENTAL_JSON: &str = "report_incremental.json";
pub const PREDICTIONS_INCREMENTAL_CSV: &str = "predictions_incremental.csv";
pub const STATS_TRUE_CSV: &str = "stats_true.csv";
pub const STATS_PREDICTED_CSV: &str = "stats_predicted.csv";
pub const CORRELATION_CSV: &str = "correlation.csv";
pub const MODEL_JSON: &str = "mlp_model.json";
pub const EPOCH_LOG_CSV: &str = "epoch_log.csv";
pub const NN_REPORT_JSON: &str = "nn_report.json";

/// Normalization sidecar for a case-base file: `case_base.csv` -> `case_base.norm.json`.
pub fn sidecar_path(case_base: &Path) -> PathBuf {
    case_base.with_extension("norm.json")
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitManifest {
    input: String,
    total: usize,
    train: usize,
    test: usize,
    train_fraction: f64,
    warnings: usize,
}

#[derive(Debug, Serialize)]
struct PredictionSummary {
    predicted_target: Target,
    best_case_id: CaseId,
    best_global_similarity: f64,
    case_base_size: usize,
    retained_case_id: Option<CaseId>,
}

#[derive(Debug, Serialize)]
struct EvalSummary<'a> {
    report: &'a str,
    test_size: usize,
    test_accuracy: f64,
    train_self_accuracy: f64,
    merged_accuracy: f64,
    incremental_retain: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct NnReport {
    train_size: usize,
    test_size: usize,
    epochs: u64,
    eta: f64,
    seed: u64,
    final_mse: f64,
    train_accuracy: f64,
    test_accuracy: f64,
}

fn load(input: &InputArgs) -> Result<ParsedDataset> {
    let file = File::open(&input.input)
        .with_context(|| format!("parse: cannot open {}", input.input.display()))?;
    let parsed = parse_csv(BufReader::new(file), input.mode())
        .with_context(|| format!("parse: {}", input.input.display()))?;
    for (row, w) in &parsed.warnings {
        eprintln!("warning: row {row}: {} = {:?}: {}", w.field, w.value, w.message);
    }
    Ok(parsed)
}

fn load_split(opts: &SplitOpts) -> Result<(ParsedDataset, SplitResult)> {
    let parsed = load(&opts.input)?;
    let split = split_sequential(&parsed.cases, opts.train_fraction).context("split")?;
    Ok((parsed, split))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    finish(w)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_case_base_files(dir: &Path, cb: &CaseBase, params: &NormalizationParams) -> Result<()> {
    let mut w = create(dir, CASE_BASE_CSV)?;
    write_case_base(cb, &mut w)?;
    finish(w)?;
    let sidecar = sidecar_path(Path::new(CASE_BASE_CSV));
    let mut w = create(dir, &sidecar.to_string_lossy())?;
    params.write_json(&mut w)?;
    finish(w)
}

fn write_split(opts: &SplitOpts, parsed: &ParsedDataset, split: &SplitResult) -> Result<SplitManifest> {
    let params = fit_minmax(&split.train).context("fit")?;
    let dir = &opts.out_dir;

    let train: Vec<Case> = split.train.cases().cloned().collect();
    let mut w = create(dir, TRAIN_CSV)?;
    write_cases(&train, &mut w)?;
    finish(w)?;
    let mut w = create(dir, TEST_CSV)?;
    write_cases(&split.test, &mut w)?;
    finish(w)?;
    write_case_base_files(dir, &split.train, &params)?;

    let manifest = SplitManifest {
        input: opts.input.input.display().to_string(),
        total: parsed.cases.len(),
        train: split.train.len(),
        test: split.test.len(),
        train_fraction: opts.train_fraction,
        warnings: parsed.warnings.len(),
    };
    write_json(dir, MANIFEST_JSON, &manifest)?;
    Ok(manifest)
}

pub fn split(args: &SplitArgs) -> Result<()> {
    let (parsed, split) = load_split(&args.split)?;
    print_json(&write_split(&args.split, &parsed, &split)?)
}

fn read_query(args: &PredictArgs, mode: ValidationMode) -> Result<Case> {
    if let Some(path) = &args.query_csv {
        if args.query.any_set() {
            bail!("query: --query-csv cannot be combined with attribute flags");
        }
        let file = File::open(path)
            .with_context(|| format!("query: cannot open {}", path.display()))?;
        let parsed = parse_csv(BufReader::new(file), mode).context("query")?;
        return match parsed.cases.as_slice() {
            [one] => Ok(one.clone()),
            rows => bail!("query: expected exactly one row in {}, found {}", path.display(), rows.len()),
        };
    }
    if !args.query.any_set() {
        bail!("query: pass --query-csv or the attribute flags (--age ... --thal)");
    }
    let raw: HashMap<String, String> = args
        .query
        .fields()
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect();
    let validated = validate_case(&raw, mode).context("query")?;
    for w in &validated.warnings {
        eprintln!("warning: {} = {:?}: {}", w.field, w.value, w.message);
    }
    Ok(validated.case)
}

fn load_case_base(path: &Path) -> Result<(CaseBase, NormalizationParams)> {
    let file = File::open(path)
        .with_context(|| format!("case base: cannot open {}", path.display()))?;
    let cb = read_case_base(BufReader::new(file))
        .with_context(|| format!("case base: {}", path.display()))?;
    let sidecar = sidecar_path(path);
    let file = File::open(&sidecar)
        .with_context(|| format!("case base: missing normalization sidecar {}", sidecar.display()))?;
    let params = NormalizationParams::read_json(BufReader::new(file))
        .with_context(|| format!("case base: {}", sidecar.display()))?;
    Ok((cb, params))
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let mode = if args.strict {
        ValidationMode::Strict
    } else {
        ValidationMode::Lenient
    };
    let query = read_query(args, mode)?;
    let cfg: SimilarityConfig = args.weights.config();

    let (mut cb, mut params) = match (&args.case_base, &args.input) {
        (Some(path), _) => load_case_base(path)?,
        (None, Some(input)) => {
            let opts = SplitOpts {
                input: InputArgs {
                    input: input.clone(),
                    strict: args.strict,
                },
                train_fraction: args.train_fraction.unwrap_or(0.6),
                out_dir: PathBuf::from("."),
            };
            let (_, split) = load_split(&opts)?;
            let params = fit_minmax(&split.train).context("fit")?;
            (split.train, params)
        }
        (None, None) => bail!("case base: pass --case-base or --input"),
    };

    let outcome = run_cycle(&query, &mut cb, &mut params, &cfg, args.retain).context("predict")?;
    let mut retained_case_id = None;
    if args.retain {
        let path = args.case_base.as_ref().expect("clap enforces --case-base with --retain");
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let name = path.file_name().context("case base: path has no file name")?;
        let mut w = create(dir, &name.to_string_lossy())?;
        write_case_base(&cb, &mut w)?;
        finish(w)?;
        let sidecar = sidecar_path(path);
        let mut w = BufWriter::new(
            File::create(&sidecar).with_context(|| format!("cannot write {}", sidecar.display()))?,
        );
        params.write_json(&mut w)?;
        finish(w)?;
        retained_case_id = cb.entries().last().map(|e| e.id);
    }

    let p = &outcome.prediction;
    print_json(&PredictionSummary {
        predicted_target: p.predicted_target,
        best_case_id: p.best_case_id,
        best_global_similarity: p.best_global_similarity,
        case_base_size: cb.len(),
        retained_case_id,
    })
}

fn run_evaluation(split: &SplitResult, cfg: &SimilarityConfig) -> Result<EvaluationReport> {
    let params = fit_minmax(&split.train).context("fit")?;
    evaluate_parallel(&split.test, &split.train, cfg, &params).context("evaluate")
}

fn write_report(dir: &Path, report: &EvaluationReport, json: &str, csv: &str) -> Result<()> {
    let mut w = create(dir, json)?;
    w.write_all(report.to_json()?.as_bytes())?;
    writeln!(w)?;
    finish(w)?;
    let mut w = create(dir, csv)?;
    report.write_records_csv(&mut w)?;
    finish(w)
}

fn summary<'a>(report: &EvaluationReport, name: &'a str) -> EvalSummary<'a> {
    EvalSummary {
        report: name,
        test_size: report.test_size,
        test_accuracy: report.test_accuracy,
        train_self_accuracy: report.train_self_accuracy,
        merged_accuracy: report.merged_accuracy,
        incremental_retain: report.incremental_retain,
    }
}

fn eval_config(args: &EvalArgs) -> SimilarityConfig {
    args.weights.config().with_incremental_retain(args.incremental_retain)
}

pub fn evaluate(args: &EvalArgs) -> Result<()> {
    let (_, split) = load_split(&args.split)?;
    let report = run_evaluation(&split, &eval_config(args))?;
    write_report(&args.split.out_dir, &report, REPORT_JSON, PREDICTIONS_CSV)?;
    print_json(&summary(&report, REPORT_JSON))
}

fn write_stats(dir: &Path, cases: &[Case], report: &EvaluationReport) -> Result<()> {
    let truths = true_labels(cases).context("stats")?;
    let tables = dataset_stats(cases, &truths).context("stats")?;
    let mut w = create(dir, STATS_TRUE_CSV)?;
    tables.write_csv(&mut w)?;
    finish(w)?;
    let mut w = create(dir, STATS_PREDICTED_CSV)?;
    report.stats.write_csv(&mut w)?;
    finish(w)
}

pub fn stats(args: &EvalArgs) -> Result<()> {
    let (parsed, split) = load_split(&args.split)?;
    let report = run_evaluation(&split, &eval_config(args))?;
    write_stats(&args.split.out_dir, &parsed.cases, &report)?;
    print_json(&serde_json::json!({
        "true": STATS_TRUE_CSV,
        "predicted": STATS_PREDICTED_CSV,
        "predicted_positives": report.stats.disease_counts.positive,
    }))
}

fn write_correlation(dir: &Path, cases: &[Case]) -> Result<()> {
    let matrix = pearson_correlation(cases).context("correlate")?;
    let mut w = create(dir, CORRELATION_CSV)?;
    matrix.write_csv(&mut w)?;
    finish(w)
}

pub fn correlate(args: &CorrelateArgs) -> Result<()> {
    let parsed = load(&args.input)?;
    write_correlation(&args.out_dir, &parsed.cases)?;
    print_json(&serde_json::json!({ "correlation": CORRELATION_CSV, "rows": parsed.cases.len() }))
}

pub fn train_nn(args: &TrainNnArgs) -> Result<()> {
    if !(args.eta >= 0.0 && args.eta.is_finite()) {
        bail!("train-nn: eta must be a finite non-negative number, got {}", args.eta);
    }
    let (_, split) = load_split(&args.split)?;
    let params = fit_minmax(&split.train).context("fit")?;
    let scale = |c: &Case| params.normalize(&c.to_feature_vector());

    let examples: Vec<_> = split.train.iter().map(|e| (scale(&e.case), e.target())).collect();
    let outcome = train_mlp(&examples, args.epochs as usize, args.eta, args.seed).context("train-nn")?;
    let model = &outcome.model;

    let mut train_correct = 0;
    for (x, t) in &examples {
        train_correct += usize::from(model.predict(x)? == *t);
    }
    let mut test_correct = 0;
    for (i, c) in split.test.iter().enumerate() {
        let t = c.target.with_context(|| format!("train-nn: test row {i} has no target"))?;
        test_correct += usize::from(model.predict(&scale(c))? == t);
    }

    let dir = &args.split.out_dir;
    let mut w = create(dir, MODEL_JSON)?;
    model.write_json(&mut w)?;
    finish(w)?;
    let mut w = create(dir, EPOCH_LOG_CSV)?;
    write_epoch_log(&outcome.epoch_mse, &mut w)?;
    finish(w)?;

    let report = NnReport {
        train_size: examples.len(),
        test_size: split.test.len(),
        epochs: args.epochs,
        eta: args.eta,
        seed: args.seed,
        final_mse: outcome.epoch_mse.last().copied().unwrap_or(f64::NAN),
        train_accuracy: train_correct as f64 / examples.len() as f64,
        test_accuracy: test_correct as f64 / split.test.len() as f64,
    };
    write_json(dir, NN_REPORT_JSON, &report)?;
    print_json(&report)
}

pub fn run_all(args: &EvalArgs) -> Result<()> {
    let (parsed, split) = load_split(&args.split)?;
    let manifest = write_split(&args.split, &parsed, &split)?;
    let dir = &args.split.out_dir;
    let base = args.weights.config();

    let frozen = run_evaluation(&split, &base.clone().with_incremental_retain(false))?;
    write_report(dir, &frozen, REPORT_JSON, PREDICTIONS_CSV)?;
    let incremental = run_evaluation(&split, &base.with_incremental_retain(true))?;
    write_report(dir, &incremental, REPORT_INCREMENTAL_JSON, PREDICTIONS_INCREMENTAL_CSV)?;

    let primary = if args.incremental_retain { &incremental } else { &frozen };
    write_stats(dir, &parsed.cases, primary)?;
    write_correlation(dir, &parsed.cases)?;

    print_json(&serde_json::json!({
        "split": manifest,
        "evaluations": [summary(&frozen, REPORT_JSON), summary(&incremental, REPORT_INCREMENTAL_JSON)],
    }))
}
