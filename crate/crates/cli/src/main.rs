use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use core_repr::compress::CompressorSpec;
use core_repr::eval::{epsilon_f1, evaluate_representation};
use core_repr::experiment::{run_experiment, EvaluationRecord, ExperimentConfig};
use core_repr::io::{
    load_embeddings, load_labels, save_labels, save_matrix, validate_dataset, DatasetManifest, ManifestEntry,
    MatrixFormat,
};
use core_repr::pipeline::{dimension_schedule, run, Mode, RunOptions};
use core_repr::report::{
    emit_cd_svg, emit_json, emit_performance_svg, emit_tsv, load_json, rank_matrix_from_records,
};
use core_repr::stats::{nemenyi_cd, summarize};
use core_repr::synth::{synthesize, SynthConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "core", version, about = "Recursive compression of document embeddings")]
struct Cli {
    /// Base seed; overrides the config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; overrides the config file's setting.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dimension schedule, one dimension per line.
    Schedule {
        #[arg(long)]
        d0: usize,
        #[arg(long, default_value_t = 2)]
        kappa: usize,
    },
    /// Generate a synthetic labelled corpus with a manifest.
    Synth(SynthArgs),
    /// Compress one matrix along its schedule.
    Compress(CompressArgs),
    /// Score a (compressed) matrix against a baseline matrix.
    Evaluate(EvaluateArgs),
    /// Run a full experiment from a config file.
    Run {
        /// Stop a task at the next step boundary after this many seconds.
        #[arg(long)]
        task_timeout: Option<f64>,
    },
    /// Friedman test and Nemenyi grouping over a results file.
    Stats(StatsArgs),
    /// Write TSV, JSON and SVG figures for a results file.
    Report {
        #[command(flatten)]
        stats: StatsArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 600)]
    docs: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 8)]
    rank: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, default_value = "synthetic")]
    name: String,
    #[arg(long, default_value = "synthetic")]
    representation: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long)]
    input: PathBuf,
    /// Compressor spec (JSON: {"kind": ..., "seed": ..., "params": {...}}).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = "rec")]
    mode: Mode,
    #[arg(long, default_value_t = 2)]
    kappa: usize,
    #[arg(long)]
    out: PathBuf,
    /// Write each step to disk as soon as it is computed instead of holding all steps in memory.
    #[arg(long)]
    spill: bool,
    /// Skip the first line of a CSV input.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value = "dataset")]
    dataset: String,
    #[arg(long, default_value = "unknown")]
    representation: String,
    #[arg(long, default_value = "external")]
    compressor: String,
    #[arg(long, default_value = "rec")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    step: usize,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Rank at this step count; without it, methods are ranked by mean epsilon-F1 over all steps.
    #[arg(long)]
    step: Option<usize>,
}

/// Error carrying a specific exit status.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn bad_config(msg: impl Into<String>) -> anyhow::Error {
    Exit(2, msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Exit>() {
                Some(Exit(code, _)) => ExitCode::from(*code),
                None => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    let seed = cli.seed;
    match cli.command {
        Command::Schedule { d0, kappa } => {
            let s = dimension_schedule(d0, kappa).map_err(|e| bad_config(e.to_string()))?;
            for d in s.dims {
                emit(&d.to_string());
            }
        }
        Command::Synth(args) => synth(args, seed.unwrap_or(0))?,
        Command::Compress(args) => compress(args, seed)?,
        Command::Evaluate(args) => evaluate(args, seed.unwrap_or(0))?,
        Command::Run { task_timeout } => {
            let Some(path) = cli.config else {
                return Err(bad_config("`run` needs --config <json>"));
            };
            return run_from_config(&path, seed, cli.threads, task_timeout);
        }
        Command::Stats(args) => {
            let summary = stats(&args)?;
            emit(&serde_json::to_string_pretty(&summary)?);
        }
        Command::Report { stats: args, out, margin } => report(&args, &out, margin)?,
    }
    Ok(ExitCode::SUCCESS)
}

/// Writes a line to stdout, tolerating a closed pipe.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn synth(args: SynthArgs, seed: u64) -> anyhow::Result<()> {
    let cfg = SynthConfig {
        docs: args.docs,
        classes: args.classes,
        rank: args.rank,
        dim: args.dim,
        separation: args.separation,
        spread: args.spread,
        noise: args.noise,
        seed,
    };
    let ds = synthesize(&cfg).map_err(|e| bad_config(e.to_string()))?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let emb = args.out.join("embeddings.core");
    let lab = args.out.join("labels.txt");
    save_matrix(&ds.embeddings, &emb, MatrixFormat::Binary)?;
    save_labels(&ds.labels, &lab)?;
    let manifest = DatasetManifest::new(vec![ManifestEntry {
        name: args.name,
        embeddings: "embeddings.core".into(),
        labels: "labels.txt".into(),
        representation: args.representation,
    }])?;
    manifest.save(&args.out.join("manifest.json"))?;
    emit(&args.out.join("manifest.json").display().to_string());
    Ok(())
}

fn input_format(path: &Path, header: bool) -> MatrixFormat {
    match MatrixFormat::from_path(path) {
        MatrixFormat::Csv { .. } => MatrixFormat::Csv { header },
        f => f,
    }
}

fn compress(args: CompressArgs, seed: Option<u64>) -> anyhow::Result<()> {
    let text = fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let mut spec: CompressorSpec = serde_json::from_str(&text).map_err(|e| bad_config(format!("spec: {e}")))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate().map_err(|e| bad_config(e.to_string()))?;
    let e0 = load_embeddings(&args.input, input_format(&args.input, args.header))?;
    let schedule = dimension_schedule(e0.cols(), args.kappa).map_err(|e| bad_config(e.to_string()))?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let opts = RunOptions { spill_dir: args.spill.then(|| args.out.clone()), timeout: None };
    let result = run(&e0, &spec, &schedule, args.mode, &opts)?;
    let mut steps = Vec::new();
    for st in &result.steps {
        let path = args.out.join(format!("step_{}.core", st.step));
        if let Some(m) = &st.matrix {
            save_matrix(m, &path, MatrixFormat::Binary)?;
        }
        let fit_path = args.out.join(format!("step_{}.fit", st.step));
        fs::write(&fit_path, st.fitted.to_bytes()).with_context(|| format!("writing {}", fit_path.display()))?;
        steps.push(json!({
            "step": st.step,
            "dim": st.dim,
            "seed": st.seed,
            "matrix": path.file_name().unwrap().to_string_lossy(),
            "fitted": fit_path.file_name().unwrap().to_string_lossy(),
            "wall_time_secs": st.wall_time.as_secs_f64(),
            "state_bytes": st.state_bytes,
        }));
    }
    let meta = json!({
        "input": args.input,
        "spec": spec,
        "mode": args.mode,
        "kappa": args.kappa,
        "d0": schedule.d0,
        "dims": schedule.dims,
        "steps": steps,
    });
    fs::write(args.out.join("run.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn evaluate(args: EvaluateArgs, seed: u64) -> anyhow::Result<()> {
    let e = load_embeddings(&args.input, MatrixFormat::from_path(&args.input))?;
    let base = load_embeddings(&args.baseline, MatrixFormat::from_path(&args.baseline))?;
    let y = load_labels(&args.labels)?;
    validate_dataset(&base, &y, args.folds)?;
    let scores = evaluate_representation(&e, &y, args.folds, args.repeats, seed)?;
    let baseline = evaluate_representation(&base, &y, args.folds, args.repeats, seed)?;
    let record = EvaluationRecord {
        dataset: args.dataset,
        representation: args.representation,
        compressor: args.compressor,
        mode: args.mode,
        spec_index: None,
        step: args.step,
        dim: e.cols(),
        mean_f1: scores.mean_f1,
        std_f1: scores.std_f1,
        epsilon_f1: epsilon_f1(scores.mean_f1, baseline.mean_f1),
        repeats: args.repeats,
        compressor_seeds: vec![],
        fold_f1: scores.per_fold.iter().map(|f| f.f1).collect(),
    };
    emit(&serde_json::to_string_pretty(&record)?);
    Ok(())
}

fn run_from_config(
    path: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
    task_timeout: Option<f64>,
) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| bad_config(format!("reading {}: {e}", path.display())))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| bad_config(format!("{}: {e}", path.display())))?;
    if cfg.manifest.is_relative() {
        if let Some(dir) = path.parent() {
            cfg.manifest = dir.join(&cfg.manifest);
        }
    }
    if cfg.output_dir.is_relative() {
        if let Some(dir) = path.parent() {
            cfg.output_dir = dir.join(&cfg.output_dir);
        }
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = threads {
        cfg.threads = t;
    }
    if task_timeout.is_some() {
        cfg.task_timeout = task_timeout;
    }
    cfg.validate().map_err(|e| bad_config(e.to_string()))?;
    let table = match run_experiment(&cfg) {
        Ok(t) => t,
        Err(e @ core_repr::Error::Manifest(_)) | Err(e @ core_repr::Error::Json(_)) => {
            return Err(bad_config(e.to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    emit_json(&table, &cfg.output_dir.join("results.json"))?;
    if table.records.iter().any(|r| !r.is_baseline()) {
        emit_tsv(&table, &cfg.output_dir.join("results.tsv"))?;
        emit_performance_svg(&table, cfg.margin, &cfg.output_dir.join("performance.svg"))?;
    }
    for f in &table.failures {
        eprintln!(
            "task failed: dataset={} compressor={} mode={}: {}",
            f.dataset,
            f.compressor.as_deref().unwrap_or("-"),
            f.mode.as_deref().unwrap_or("-"),
            f.error
        );
    }
    emit(&cfg.output_dir.join("results.json").display().to_string());
    Ok(if table.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn stats(args: &StatsArgs) -> anyhow::Result<core_repr::stats::RankSummary> {
    let table = load_json(&args.records)?;
    let ranks = rank_matrix_from_records(&table, args.step)?;
    let summary = summarize(&ranks, args.alpha).map_err(|e| bad_config(e.to_string()))?;
    Ok(summary)
}

fn report(args: &StatsArgs, out: &Path, margin: f64) -> anyhow::Result<()> {
    if !(margin >= 0.0) {
        bail!(bad_config("margin must be >= 0"));
    }
    let table = load_json(&args.records)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    emit_tsv(&table, &out.join("results.tsv"))?;
    emit_performance_svg(&table, margin, &out.join("performance.svg"))?;
    let ranks = rank_matrix_from_records(&table, args.step)?;
    let cd = nemenyi_cd(ranks.k(), ranks.n(), args.alpha)?;
    emit_cd_svg(&ranks, &cd, &out.join("cd.svg"))?;
    if ranks.n() >= 2 {
        let summary = summarize(&ranks, args.alpha)?;
        fs::write(out.join("stats.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok(())
}

