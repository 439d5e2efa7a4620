//! Command-line front end for the judge evaluation engine.
//!
//! Subcommands: `run` executes a strategy over a JSONL dataset into a run
//! directory, `metrics` scores finished runs, `compare` reports relative
//! character cost between two runs, and `curve` emits a cumulative accuracy
//! curve as TSV. Every `run` flag can also be given in a key=value config
//! file (keys named like the long flags); command-line values win.
//!
//! Exit codes: 0 success, 1 usage or invalid flag values, 2 a run aborted
//! mid-flight, 3 storage problems (existing or missing run directories,
//! corrupt logs, manifest mismatches, unreadable datasets).

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lwe_core::core::{RunConfig, StrategyKind, TestCase};
use lwe_core::engine::{self, EngineError, RunResult};
use lwe_core::metrics::{
    self, relative_cost, CiMethod, MetricReport, MetricsError,
};
use lwe_core::provider::ledger::UsageLedger;
use lwe_core::provider::sim::{SimulatedProvider, SimulatorParams};
use lwe_core::provider::Provider;
use lwe_core::store::runlog::{CaseOrderEntry, Manifest, ReplayedRun, RunWriter, SCHEMA_VERSION};
use lwe_core::store::{self, StoreError};
use lwe_core::templates::TemplateStore;

#[derive(Parser)]
#[command(name = "lwe", version, about = "Pairwise LLM-judge evaluation runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a dataset with one strategy, writing a resumable run directory
    Run(Box<RunArgs>),
    /// Score one or more finished runs
    Metrics(MetricsArgs),
    /// Relative character cost of a run against a baseline run
    Compare(CompareArgs),
    /// Cumulative accuracy curve with a confidence band, as TSV
    Curve(CurveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// Human-readable tables
    Text,
    /// One JSON object per line
    Machine,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "machine" => Ok(OutputFormat::Machine),
            other => Err(format!("unknown format '{other}' (expected text or machine)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CurveMethod {
    Wald,
    Wilson,
}

#[derive(Args)]
struct RunArgs {
    /// JSONL dataset file (one case per line)
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Run directory to create (or resume)
    #[arg(long)]
    out: Option<PathBuf>,
    /// vanilla | cot | majority | sample-specific | lwe | selective-lwe
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Which dataset permutation to evaluate (same seed, different order)
    #[arg(long)]
    permutation_run: Option<u32>,
    /// Evaluate only the first N cases of the shuffled order
    #[arg(long)]
    limit: Option<usize>,
    /// Feedback batch size between refinements
    #[arg(long)]
    batch_size: Option<u32>,
    /// Meta-prompt length (chars) that triggers summarization
    #[arg(long)]
    summarize_threshold: Option<usize>,
    /// Judge both presentation orders
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    paired: Option<bool>,
    /// Samples per presentation for majority voting
    #[arg(long)]
    majority_k: Option<u32>,
    #[arg(long)]
    judge_temperature: Option<f64>,
    #[arg(long)]
    majority_temperature: Option<f64>,
    /// Abort on the first provider failure instead of recording an invalid verdict
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    fail_fast: Option<bool>,
    /// Compare raw A/B labels in the consistency gate instead of response identities
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    literal_consistency: Option<bool>,
    /// sim | http
    #[arg(long)]
    provider: Option<String>,
    /// Model name for the http provider
    #[arg(long)]
    model: Option<String>,
    /// File whose contents replace the built-in initial meta-prompt
    #[arg(long)]
    initial_meta: Option<PathBuf>,
    /// Continue an interrupted run in --out
    #[arg(long)]
    resume: bool,
    /// key=value file supplying defaults for any of these flags
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Simulator: plain-prompt correctness probability
    #[arg(long)]
    sim_p_plain: Option<f64>,
    /// Simulator: tailored-prompt correctness probability
    #[arg(long)]
    sim_p_tailored: Option<f64>,
    /// Simulator: fraction of cases with positional bias
    #[arg(long)]
    sim_flip_prob: Option<f64>,
    /// Simulator: tailored-prompt gain per refinement
    #[arg(long)]
    sim_improvement: Option<f64>,
    /// Simulator: characters each refinement adds to the meta-prompt
    #[arg(long)]
    sim_meta_growth: Option<usize>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Run directories to score
    #[arg(long = "run", required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    run: PathBuf,
    /// Two-sided miscoverage level for the band
    #[arg(long, default_value = "0.05")]
    alpha: f64,
    #[arg(long, value_enum, default_value = "wald")]
    method: CurveMethod,
    /// Output file; "-" or omitted writes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A terminal failure carrying its process exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
    fn data(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        let code = match e {
            StoreError::LimitTooLarge { .. } => 1,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Store(s) => s.into(),
            EngineError::Aborted(_) => Failure { code: 2, message: e.to_string() },
            other => Failure { code: 2, message: format!("run aborted: {other}") },
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        Failure::data(e.to_string())
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(*args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Curve(args) => cmd_curve(args),
    };
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}

/// Defaults read from a key=value file; keys are the long flag names.
struct FileSettings {
    values: HashMap<String, String>,
}

impl FileSettings {
    fn empty() -> Self {
        FileSettings { values: HashMap::new() }
    }

    fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Failure::usage(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    i + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileSettings { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| Failure::usage(format!("config key {key}: {e}"))),
        }
    }
}

/// CLI value, then config-file value, then the built-in default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, Failure> {
    flag.or(file)
        .ok_or_else(|| Failure::usage(format!("--{name} is required (flag or config file)")))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let file = match &args.config {
        Some(path) => FileSettings::load(path)?,
        None => FileSettings::empty(),
    };

    let dataset_path: PathBuf =
        required(args.dataset, file.get::<PathBuf>("dataset")?, "dataset")?;
    let out_dir: PathBuf = required(args.out, file.get::<PathBuf>("out")?, "out")?;
    let strategy_name: String =
        required(args.strategy, file.get::<String>("strategy")?, "strategy")?;
    let strategy = StrategyKind::from_str(&strategy_name).map_err(Failure::usage)?;

    let seed = pick(args.seed, file.get("seed")?, 0);
    let permutation_run = pick(args.permutation_run, file.get("permutation-run")?, 0);
    let limit = args.limit.or(file.get("limit")?);
    let format = pick(args.format, file.get("format")?, OutputFormat::Text);

    let mut config = RunConfig::new(strategy);
    config.seed = seed;
    config.batch_size = pick(args.batch_size, file.get("batch-size")?, config.batch_size);
    config.summarize_threshold = pick(
        args.summarize_threshold,
        file.get("summarize-threshold")?,
        config.summarize_threshold,
    );
    config.paired_evaluation = pick(args.paired, file.get("paired")?, config.paired_evaluation);
    config.majority_k = pick(args.majority_k, file.get("majority-k")?, config.majority_k);
    config.judge_temperature = pick(
        args.judge_temperature,
        file.get("judge-temperature")?,
        config.judge_temperature,
    );
    config.majority_temperature = pick(
        args.majority_temperature,
        file.get("majority-temperature")?,
        config.majority_temperature,
    );
    config.fail_fast = pick(args.fail_fast, file.get("fail-fast")?, config.fail_fast);
    config.literal_consistency = pick(
        args.literal_consistency,
        file.get("literal-consistency")?,
        config.literal_consistency,
    );
    config.validate().map_err(|e| Failure::usage(e.to_string()))?;

    let dataset = store::load_dataset(&dataset_path, seed, permutation_run, limit)?;

    let provider_name = pick(
        args.provider,
        file.get("provider")?,
        "sim".to_string(),
    );
    let provider: Box<dyn Provider> = match provider_name.as_str() {
        "sim" => {
            let mut params = SimulatorParams::new(seed);
            params.p_plain = pick(args.sim_p_plain, file.get("sim-p-plain")?, params.p_plain);
            params.p_tailored = pick(
                args.sim_p_tailored,
                file.get("sim-p-tailored")?,
                params.p_tailored,
            );
            params.flip_prob = pick(
                args.sim_flip_prob,
                file.get("sim-flip-prob")?,
                params.flip_prob,
            );
            params.improvement_per_refine = pick(
                args.sim_improvement,
                file.get("sim-improvement")?,
                params.improvement_per_refine,
            );
            let growth = pick(args.sim_meta_growth, file.get("sim-meta-growth")?, 0);
            let sim = SimulatedProvider::new(params, &dataset.cases)
                .map_err(|e| Failure::usage(e.to_string()))?
                .with_meta_growth(growth);
            Box::new(sim)
        }
        "http" => {
            let model: String = required(args.model, file.get("model")?, "model")?;
            let mut http_config = lwe_core::provider::http::HttpConfig::from_env(model);
            http_config.retry = config.retry.clone();
            let http = lwe_core::provider::http::HttpProvider::new(http_config)
                .map_err(|e| Failure::usage(e.to_string()))?;
            Box::new(http)
        }
        other => {
            return Err(Failure::usage(format!(
                "unknown provider '{other}' (expected sim or http)"
            )))
        }
    };

    let initial_meta = match args.initial_meta.or(file.get("initial-meta")?) {
        Some(path) => Some(fs::read_to_string(&path).map_err(|e| {
            Failure::usage(format!("cannot read initial meta {}: {e}", path.display()))
        })?),
        None => None,
    };

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        strategy,
        seed,
        permutation_run,
        limit,
        provider_name: provider.name().to_string(),
        dataset_checksum: dataset.checksum.clone(),
        config: config.clone(),
        case_order: dataset
            .cases
            .iter()
            .map(|c| CaseOrderEntry { id: c.id.clone(), gold: c.gold })
            .collect(),
        swapped_judgment_reuses_eval_prompt: true,
    };

    let (mut writer, resumed): (RunWriter, Option<ReplayedRun>) = if args.resume {
        if !out_dir.join("manifest.json").exists() {
            return Err(Failure::data(format!(
                "nothing to resume: no run at {}",
                out_dir.display()
            )));
        }
        let (writer, replayed) = RunWriter::open_resume(&out_dir)?;
        check_manifest(replayed.manifest(), &manifest)?;
        if replayed.completed {
            println!("run already complete: {}", out_dir.display());
            return Ok(());
        }
        (writer, Some(replayed))
    } else {
        (RunWriter::create(&out_dir, &manifest)?, None)
    };

    let templates = TemplateStore::embedded();
    let mut progress = |done: usize, total: usize| {
        if done % 25 == 0 || done == total {
            eprintln!("processed {done}/{total} cases");
        }
    };
    let result = engine::execute(
        provider.as_ref(),
        &templates,
        &dataset.cases,
        &config,
        initial_meta.as_deref(),
        &mut writer,
        resumed.as_ref(),
        Some(&mut progress),
    )?;

    let report = if dataset.cases.iter().all(|c| c.gold.is_some()) {
        Some(metrics::build_report(
            &result.records,
            &dataset.cases,
            config.paired_evaluation,
            config.literal_consistency,
        )?)
    } else {
        eprintln!("warning: dataset has unlabeled cases; skipping the score report");
        None
    };
    writer.finalize(report.as_ref(), result.final_meta.as_deref())?;

    print_run_summary(&out_dir, &result, report.as_ref(), format);
    Ok(())
}

fn check_manifest(found: &Manifest, expected: &Manifest) -> Result<(), Failure> {
    let mut mismatches = Vec::new();
    if found.strategy != expected.strategy {
        mismatches.push(format!(
            "strategy {} vs {}",
            found.strategy, expected.strategy
        ));
    }
    if found.seed != expected.seed {
        mismatches.push(format!("seed {} vs {}", found.seed, expected.seed));
    }
    if found.permutation_run != expected.permutation_run {
        mismatches.push(format!(
            "permutation-run {} vs {}",
            found.permutation_run, expected.permutation_run
        ));
    }
    if found.limit != expected.limit {
        mismatches.push("limit differs".to_string());
    }
    if found.dataset_checksum != expected.dataset_checksum {
        mismatches.push("dataset contents differ".to_string());
    }
    if found.config != expected.config {
        mismatches.push("run configuration differs".to_string());
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(StoreError::ManifestMismatch(mismatches.join("; ")).into())
    }
}

fn print_run_summary(
    out_dir: &Path,
    result: &RunResult,
    report: Option<&MetricReport>,
    format: OutputFormat,
) {
    let gated = result.inconsistent_ids.as_ref().map(|ids| ids.len());
    match format {
        OutputFormat::Machine => {
            let mut row = json!({
                "run": out_dir.display().to_string(),
                "strategy": result.config_snapshot.strategy.as_str(),
                "cases": result.dataset_order.len(),
                "records": result.records.len(),
                "total_chars": result.ledger.total_chars(),
            });
            if let Some(report) = report {
                row["accuracy"] = json!(report.accuracy);
                row["consistency"] = json!(report.consistency);
                row["pair_accuracy"] = json!(report.pair_accuracy);
                row["invalid_count"] = json!(report.invalid_count);
            }
            if let Some(gated) = gated {
                row["gated_into_learning"] = json!(gated);
            }
            println!("{row}");
        }
        OutputFormat::Text => {
            println!("strategy            {}", result.config_snapshot.strategy);
            println!("cases               {}", result.dataset_order.len());
            if let Some(report) = report {
                println!("accuracy            {:.3}", report.accuracy);
                if let Some(consistency) = report.consistency {
                    println!("consistency         {consistency:.3}");
                }
                if let Some(pair) = report.pair_accuracy {
                    println!("pair accuracy       {pair:.3}");
                }
                println!("invalid verdicts    {}", report.invalid_count);
            }
            if let Some(gated) = gated {
                println!("gated into learning {gated}");
            }
            println!("total characters    {}", result.ledger.total_chars());
            println!("run directory       {}", out_dir.display());
        }
    }
}

/// Builds scoring skeletons from the manifest's case order; metrics only
/// need ids and gold labels.
fn cases_from_manifest(manifest: &Manifest) -> Vec<TestCase> {
    manifest
        .case_order
        .iter()
        .map(|entry| TestCase {
            id: entry.id.clone(),
            question: String::new(),
            image: None,
            response_a: String::new(),
            response_b: String::new(),
            gold: entry.gold,
        })
        .collect()
}

fn load_run(dir: &Path) -> Result<(ReplayedRun, Vec<TestCase>), Failure> {
    let replayed = store::replay(dir)?;
    if !replayed.completed {
        eprintln!(
            "warning: {} has no terminal event; scoring the logged prefix",
            dir.display()
        );
    }
    let cases = cases_from_manifest(replayed.manifest());
    Ok((replayed, cases))
}

fn gold_or_fail(cases: &[TestCase], dir: &Path) -> Result<(), Failure> {
    if cases.iter().any(|c| c.gold.is_none()) {
        return Err(Failure::data(format!(
            "{} has unlabeled cases; metrics need gold labels",
            dir.display()
        )));
    }
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), Failure> {
    let mut reports = Vec::new();
    for dir in &args.runs {
        let (replayed, cases) = load_run(dir)?;
        gold_or_fail(&cases, dir)?;
        let config = &replayed.manifest().config;
        let report = metrics::build_report(
            &replayed.records,
            &cases,
            config.paired_evaluation,
            config.literal_consistency,
        )?;
        reports.push((dir.clone(), report));
    }

    match args.format {
        OutputFormat::Machine => {
            for (dir, report) in &reports {
                let row = json!({
                    "run": dir.display().to_string(),
                    "n": report.n,
                    "accuracy": report.accuracy,
                    "consistency": report.consistency,
                    "pair_accuracy": report.pair_accuracy,
                    "invalid_count": report.invalid_count,
                });
                println!("{row}");
            }
            if reports.len() > 1 {
                let acc: Vec<f64> = reports.iter().map(|(_, r)| r.accuracy).collect();
                let (mean, std) = metrics::mean_and_sample_std(&acc)?;
                println!("{}", json!({"aggregate": "accuracy", "mean": mean, "std": std}));
            }
        }
        OutputFormat::Text => {
            println!(
                "{:<40} {:>6} {:>9} {:>12} {:>14} {:>8}",
                "run", "n", "accuracy", "consistency", "pair accuracy", "invalid"
            );
            for (dir, report) in &reports {
                println!(
                    "{:<40} {:>6} {:>9.3} {:>12} {:>14} {:>8}",
                    dir.display(),
                    report.n,
                    report.accuracy,
                    report
                        .consistency
                        .map(|v| format!("{v:.3}"))
                        .unwrap_or_else(|| "-".to_string()),
                    report
                        .pair_accuracy
                        .map(|v| format!("{v:.3}"))
                        .unwrap_or_else(|| "-".to_string()),
                    report.invalid_count,
                );
            }
            if reports.len() > 1 {
                print_aggregate_rows(&reports)?;
            }
        }
    }
    Ok(())
}

fn print_aggregate_rows(reports: &[(PathBuf, MetricReport)]) -> Result<(), Failure> {
    let acc: Vec<f64> = reports.iter().map(|(_, r)| r.accuracy).collect();
    let (mean, std) = metrics::mean_and_sample_std(&acc)?;
    println!("{:<40} {:>6} {:>8.3} +/- {:.3}", "mean accuracy", "", mean, std);
    let consistency: Vec<f64> = reports
        .iter()
        .filter_map(|(_, r)| r.consistency)
        .collect();
    if consistency.len() == reports.len() {
        let (mean, std) = metrics::mean_and_sample_std(&consistency)?;
        println!(
            "{:<40} {:>6} {:>8.3} +/- {:.3}",
            "mean consistency", "", mean, std
        );
    }
    let pair: Vec<f64> = reports.iter().filter_map(|(_, r)| r.pair_accuracy).collect();
    if pair.len() == reports.len() {
        let (mean, std) = metrics::mean_and_sample_std(&pair)?;
        println!(
            "{:<40} {:>6} {:>8.3} +/- {:.3}",
            "mean pair accuracy", "", mean, std
        );
    }
    Ok(())
}

fn ledger_of(replayed: &ReplayedRun) -> UsageLedger {
    UsageLedger {
        entries: replayed.ledger_entries.clone(),
    }
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    let (run, _) = load_run(&args.run)?;
    let (baseline, _) = load_run(&args.baseline)?;
    let run_ledger = ledger_of(&run);
    let baseline_ledger = ledger_of(&baseline);
    let ratio = relative_cost(&run_ledger, &baseline_ledger)?;
    let run_tags = run_ledger.tag_totals();
    let baseline_tags = baseline_ledger.tag_totals();

    match args.format {
        OutputFormat::Machine => {
            let row = json!({
                "run": args.run.display().to_string(),
                "baseline": args.baseline.display().to_string(),
                "relative_cost": ratio,
                "run_chars": run_ledger.total_chars(),
                "baseline_chars": baseline_ledger.total_chars(),
                "run_by_tag": run_tags
                    .iter()
                    .map(|(tag, chars)| (tag.as_str().to_string(), *chars))
                    .collect::<HashMap<_, _>>(),
            });
            println!("{row}");
        }
        OutputFormat::Text => {
            println!("{:<18} {:>14} {:>14}", "call tag", "run chars", "baseline chars");
            let mut tags: Vec<_> = run_tags.keys().chain(baseline_tags.keys()).collect();
            tags.sort();
            tags.dedup();
            for tag in tags {
                println!(
                    "{:<18} {:>14} {:>14}",
                    tag.as_str(),
                    run_tags.get(tag).copied().unwrap_or(0),
                    baseline_tags.get(tag).copied().unwrap_or(0),
                );
            }
            println!(
                "{:<18} {:>14} {:>14}",
                "total",
                run_ledger.total_chars(),
                baseline_ledger.total_chars()
            );
            println!("relative cost {ratio:.1}x");
        }
    }
    Ok(())
}

fn cmd_curve(args: CurveArgs) -> Result<(), Failure> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::usage("--alpha must be in (0, 1)"));
    }
    let (replayed, cases) = load_run(&args.run)?;
    gold_or_fail(&cases, &args.run)?;
    let method = match args.method {
        CurveMethod::Wald => CiMethod::Wald,
        CurveMethod::Wilson => CiMethod::Wilson,
    };
    let curve = metrics::cumulative_curve(&replayed.records, &cases, args.alpha, method);
    let mut out = String::from("t\taccuracy\tlower\tupper\n");
    for point in &curve {
        out.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\n",
            point.t, point.accuracy, point.lower, point.upper
        ));
    }
    match args.out.as_deref() {
        None => print!("{out}"),
        Some(path) if path == Path::new("-") => print!("{out}"),
        Some(path) => fs::write(path, out).map_err(|e| {
            Failure::data(format!("cannot write {}: {e}", path.display()))
        })?,
    }
    Ok(())
}
