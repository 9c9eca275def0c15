//! End-to-end experiments over a dataset manifest.
//!
//! Every dataset gets one baseline evaluation on its uncompressed matrix.
//! Each `(dataset, compressor, mode)` task then compresses the matrix once per
//! repeat (re-seeded per repeat) and scores every step on that repeat's folds,
//! which are shared with the baseline. Results are keyed and sorted, so the
//! output does not depend on the worker count.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compress::{CompressorKind, CompressorSpec};
use crate::error::{Error, Result};
use crate::eval::{fold_plan, score_folds, EvaluationScores, FoldAssignment, FoldScore, LogRegConfig};
use crate::io::{load_embeddings, load_labels, validate_dataset, DatasetManifest, LabelVector, MatrixFormat};
use crate::matrix::EmbeddingMatrix;
use crate::pipeline::{dimension_schedule, run, Mode, RunOptions};
use crate::seed::mix64;

pub const SCHEMA_VERSION: u32 = 1;
pub const BASELINE: &str = "baseline";

fn default_kappa() -> usize {
    2
}
fn default_modes() -> Vec<Mode> {
    vec![Mode::Recursive, Mode::Direct]
}
fn default_folds() -> usize {
    3
}
fn default_repeats() -> usize {
    3
}
fn default_margin() -> f64 {
    0.05
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_threads() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub specs: Vec<CompressorSpec>,
    #[serde(default = "default_kappa")]
    pub kappa: usize,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Per-task wall-clock budget in seconds; checked between compression steps.
    #[serde(default)]
    pub task_timeout: Option<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.specs.is_empty() {
            return Err(Error::InvalidParameter("config lists no compressor specs".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidParameter("config lists no modes".into()));
        }
        if self.kappa < 2 {
            return Err(Error::InvalidParameter("kappa must be >= 2".into()));
        }
        if self.folds < 2 || self.repeats == 0 {
            return Err(Error::InvalidParameter("need folds >= 2 and repeats >= 1".into()));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidParameter("margin must be >= 0".into()));
        }
        if self.task_timeout.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::InvalidParameter("task timeout must be positive".into()));
        }
        for s in &self.specs {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub dataset: String,
    pub representation: String,
    /// Compressor kind name, or `baseline` for the uncompressed matrix.
    pub compressor: String,
    /// `rec`, `dir`, or `baseline`.
    pub mode: String,
    pub spec_index: Option<usize>,
    /// Completed compression steps (0 for the baseline).
    pub step: usize,
    pub dim: usize,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub epsilon_f1: f64,
    pub repeats: usize,
    pub compressor_seeds: Vec<u64>,
    /// Test-fold micro-F1 ordered by (repeat, fold).
    pub fold_f1: Vec<f64>,
}

impl EvaluationRecord {
    pub fn is_baseline(&self) -> bool {
        self.compressor == BASELINE
    }

    /// Display name: the compressor, with `-dir` for direct runs.
    pub fn method(&self) -> String {
        if self.mode == Mode::Direct.name() {
            format!("{}-dir", self.compressor)
        } else {
            self.compressor.clone()
        }
    }

    fn sort_key(&self) -> (&str, &str, &str, Option<usize>, usize) {
        (&self.dataset, &self.compressor, &self.mode, self.spec_index, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub dataset: String,
    pub compressor: Option<String>,
    pub mode: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub base_seed: u64,
    pub kappa: usize,
    pub folds: usize,
    pub repeats: usize,
    pub margin: f64,
    pub modes: Vec<Mode>,
    pub specs: Vec<CompressorSpec>,
    pub manifest: PathBuf,
    /// Seed of the fold plan used for each dataset's baseline and compressed variants.
    pub evaluation_seeds: Vec<(String, u64)>,
    pub classifier: String,
    pub step_convention: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub schema_version: u32,
    pub metadata: RunMetadata,
    pub records: Vec<EvaluationRecord>,
    pub failures: Vec<TaskFailure>,
}

impl ResultsTable {
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        self.failures.sort_by(|a, b| {
            (&a.dataset, &a.compressor, &a.mode).cmp(&(&b.dataset, &b.compressor, &b.mode))
        });
    }

    pub fn compressed(&self) -> impl Iterator<Item = &EvaluationRecord> {
        self.records.iter().filter(|r| !r.is_baseline())
    }
}

/// Stable 64-bit FNV-1a hash of a dataset name.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn evaluation_seed(base_seed: u64, dataset: &str) -> u64 {
    mix64(base_seed, name_hash(dataset))
}

/// Compressor seed for spec `spec_index`, repeat `repeat`.
pub fn compressor_seed(base_seed: u64, spec: &CompressorSpec, spec_index: usize, repeat: usize) -> u64 {
    mix64(mix64(base_seed, spec_index as u64) ^ spec.seed, repeat as u64)
}

struct LoadedDataset {
    name: String,
    representation: String,
    embeddings: EmbeddingMatrix,
    labels: LabelVector,
    plan: Vec<FoldAssignment>,
    baseline: EvaluationScores,
}

fn load_dataset(entry: &crate::io::ManifestEntry, cfg: &ExperimentConfig) -> Result<LoadedDataset> {
    let embeddings = load_embeddings(&entry.embeddings, MatrixFormat::from_path(&entry.embeddings))?;
    let labels = load_labels(&entry.labels)?;
    validate_dataset(&embeddings, &labels, cfg.folds)?;
    let plan = fold_plan(&labels, cfg.folds, cfg.repeats, evaluation_seed(cfg.seed, &entry.name))?;
    let mut scores = Vec::new();
    for (r, folds) in plan.iter().enumerate() {
        scores.extend(score_folds(&embeddings, &labels, folds, r, LogRegConfig::default())?);
    }
    Ok(LoadedDataset {
        name: entry.name.clone(),
        representation: entry.representation.clone(),
        embeddings,
        labels,
        plan,
        baseline: EvaluationScores::from_folds(scores),
    })
}

fn run_task(
    ds: &LoadedDataset,
    spec: &CompressorSpec,
    spec_index: usize,
    mode: Mode,
    cfg: &ExperimentConfig,
) -> Result<Vec<EvaluationRecord>> {
    let schedule = dimension_schedule(ds.embeddings.cols(), cfg.kappa)?;
    let opts = RunOptions { spill_dir: None, timeout: cfg.task_timeout.map(Duration::from_secs_f64) };
    let steps = schedule.steps();
    let mut per_step: Vec<Vec<FoldScore>> = vec![Vec::new(); steps];
    let mut seeds = Vec::with_capacity(cfg.repeats);
    let mut cached = None;
    for (r, folds) in ds.plan.iter().enumerate() {
        let mut s = *spec;
        s.seed = compressor_seed(cfg.seed, spec, spec_index, r);
        seeds.push(s.seed);
        // exact SVD ignores its seed, so one run serves every repeat
        let compressed = match (&cached, spec.kind) {
            (Some(c), CompressorKind::SvdExact) => Arc::clone(c),
            _ => {
                let run = run(&ds.embeddings, &s, &schedule, mode, &opts)?;
                let c = Arc::new(run.steps.into_iter().map(|st| st.matrix.expect("retained")).collect::<Vec<_>>());
                cached = Some(Arc::clone(&c));
                c
            }
        };
        for (i, m) in compressed.iter().enumerate() {
            per_step[i].extend(score_folds(m, &ds.labels, folds, r, LogRegConfig::default()).map_err(|e| e.at_step(i + 1))?);
        }
    }
    Ok(per_step
        .into_iter()
        .enumerate()
        .map(|(i, scores)| {
            let s = EvaluationScores::from_folds(scores);
            EvaluationRecord {
                dataset: ds.name.clone(),
                representation: ds.representation.clone(),
                compressor: spec.kind.name().to_string(),
                mode: mode.name().to_string(),
                spec_index: Some(spec_index),
                step: i + 1,
                dim: schedule.dims[i],
                mean_f1: s.mean_f1,
                std_f1: s.std_f1,
                epsilon_f1: crate::eval::epsilon_f1(s.mean_f1, ds.baseline.mean_f1),
                repeats: cfg.repeats,
                compressor_seeds: seeds.clone(),
                fold_f1: s.per_fold.iter().map(|f| f.f1).collect(),
            }
        })
        .collect())
}

fn baseline_record(ds: &LoadedDataset, repeats: usize) -> EvaluationRecord {
    EvaluationRecord {
        dataset: ds.name.clone(),
        representation: ds.representation.clone(),
        compressor: BASELINE.to_string(),
        mode: BASELINE.to_string(),
        spec_index: None,
        step: 0,
        dim: ds.embeddings.cols(),
        mean_f1: ds.baseline.mean_f1,
        std_f1: ds.baseline.std_f1,
        epsilon_f1: 0.0,
        repeats,
        compressor_seeds: vec![],
        fold_f1: ds.baseline.per_fold.iter().map(|f| f.f1).collect(),
    }
}

fn error_chain(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        src = s.source();
    }
    msg
}

/// Runs every `(dataset, spec, mode)` task on a pool of `cfg.threads` workers.
///
/// Per-dataset and per-task failures are collected in `ResultsTable::failures`;
/// only configuration errors abort the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let manifest = DatasetManifest::load(&cfg.manifest)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;

    pool.install(|| {
        let loaded: Vec<std::result::Result<LoadedDataset, TaskFailure>> = manifest
            .entries
            .par_iter()
            .map(|entry| {
                load_dataset(entry, cfg).map_err(|e| TaskFailure {
                    dataset: entry.name.clone(),
                    compressor: None,
                    mode: None,
                    error: error_chain(&e),
                })
            })
            .collect();
        let mut failures = Vec::new();
        let mut datasets = Vec::new();
        for l in loaded {
            match l {
                Ok(d) => datasets.push(d),
                Err(f) => failures.push(f),
            }
        }

        let tasks: Vec<(&LoadedDataset, usize, Mode)> = datasets
            .iter()
            .flat_map(|d| (0..cfg.specs.len()).flat_map(move |s| cfg.modes.iter().map(move |&m| (d, s, m))))
            .collect();
        let outcomes: Vec<_> = tasks
            .par_iter()
            .map(|&(d, s, m)| {
                run_task(d, &cfg.specs[s], s, m, cfg).map_err(|e| TaskFailure {
                    dataset: d.name.clone(),
                    compressor: Some(cfg.specs[s].kind.name().to_string()),
                    mode: Some(m.name().to_string()),
                    error: error_chain(&e),
                })
            })
            .collect();

        let mut records: Vec<EvaluationRecord> = datasets.iter().map(|d| baseline_record(d, cfg.repeats)).collect();
        for o in outcomes {
            match o {
                Ok(r) => records.extend(r),
                Err(f) => failures.push(f),
            }
        }
        let mut table = ResultsTable {
            schema_version: SCHEMA_VERSION,
            metadata: RunMetadata {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                base_seed: cfg.seed,
                kappa: cfg.kappa,
                folds: cfg.folds,
                repeats: cfg.repeats,
                margin: cfg.margin,
                modes: cfg.modes.clone(),
                specs: cfg.specs.clone(),
                manifest: cfg.manifest.clone(),
                evaluation_seeds: manifest
                    .entries
                    .iter()
                    .map(|e| (e.name.clone(), evaluation_seed(cfg.seed, &e.name)))
                    .collect(),
                classifier: describe_classifier(),
                step_convention: "step = number of completed compression steps (tau); step 0 is the uncompressed baseline"
                    .to_string(),
            },
            records,
            failures,
        };
        table.sort();
        Ok(table)
    })
}

fn describe_classifier() -> String {
    let c = LogRegConfig::default();
    format!(
        "multinomial logistic regression, C={}, L-BFGS (history {}), gradient tolerance {:e}, max {} iterations",
        c.c, c.history, c.gradient_tolerance, c.max_iter
    )
}
