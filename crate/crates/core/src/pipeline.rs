//! Dimension schedules, recursive and direct compression runs, and the cost model.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::compress::{CompressorSpec, FittedCompressor};
use crate::error::{Error, Result};
use crate::io::{save_matrix, MatrixFormat};
use crate::matrix::EmbeddingMatrix;
use crate::seed::mix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// Each step is fitted on the previous step's output.
    #[serde(rename = "rec")]
    Recursive,
    /// Each step is fitted on the original matrix.
    #[serde(rename = "dir")]
    Direct,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Recursive => "rec",
            Mode::Direct => "dir",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rec" | "recursive" => Ok(Mode::Recursive),
            "dir" | "direct" => Ok(Mode::Direct),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionSchedule {
    pub kappa: usize,
    pub d0: usize,
    /// Target dimensions `d_1..d_k`, excluding `d0`.
    pub dims: Vec<usize>,
}

impl CompressionSchedule {
    /// An explicit list of target dimensions, each in `1..=d0`.
    pub fn custom(d0: usize, kappa: usize, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidParameter("schedule has no steps".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d == 0 || d > d0) {
            return Err(Error::InvalidParameter(format!("schedule dimension {d} outside 1..={d0}")));
        }
        Ok(Self { kappa, d0, dims })
    }

    pub fn steps(&self) -> usize {
        self.dims.len()
    }
}

/// Applies `d_{i+1} = max(floor(d_i / kappa), kappa)` from `d0` until the value repeats.
pub fn dimension_schedule(d0: usize, kappa: usize) -> Result<CompressionSchedule> {
    if kappa < 2 {
        return Err(Error::InvalidParameter(format!("kappa must be >= 2, got {kappa}")));
    }
    if d0 <= kappa {
        return Err(Error::InvalidParameter(format!("d0 = {d0} <= kappa = {kappa} gives an empty schedule")));
    }
    let mut dims = Vec::new();
    let mut d = d0;
    loop {
        let next = (d / kappa).max(kappa);
        if next == d {
            break;
        }
        dims.push(next);
        d = next;
    }
    Ok(CompressionSchedule { kappa, d0, dims })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// 1-based step index.
    pub step: usize,
    pub dim: usize,
    pub seed: u64,
    /// Present unless the run spilled its outputs to disk.
    pub matrix: Option<EmbeddingMatrix>,
    pub spilled_to: Option<PathBuf>,
    pub fitted: FittedCompressor,
    pub wall_time: Duration,
    pub state_bytes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionRun {
    pub schedule: CompressionSchedule,
    pub spec: CompressorSpec,
    pub mode: Mode,
    pub steps: Vec<StepOutput>,
}

impl CompressionRun {
    pub fn matrices(&self) -> impl Iterator<Item = &EmbeddingMatrix> {
        self.steps.iter().filter_map(|s| s.matrix.as_ref())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write each step to `<dir>/step_<i>.core` instead of keeping it in memory.
    pub spill_dir: Option<PathBuf>,
    /// Abandon the run at the next step boundary once this much time has passed.
    pub timeout: Option<Duration>,
}

/// Seed for step `step` (1-based) of a run seeded with `seed`.
pub fn step_seed(seed: u64, step: usize) -> u64 {
    mix64(seed, step as u64)
}

pub fn compress_recursive(e0: &EmbeddingMatrix, spec: &CompressorSpec, s: &CompressionSchedule) -> Result<CompressionRun> {
    run(e0, spec, s, Mode::Recursive, &RunOptions::default())
}

pub fn compress_direct(e0: &EmbeddingMatrix, spec: &CompressorSpec, s: &CompressionSchedule) -> Result<CompressionRun> {
    run(e0, spec, s, Mode::Direct, &RunOptions::default())
}

pub fn run(
    e0: &EmbeddingMatrix,
    spec: &CompressorSpec,
    s: &CompressionSchedule,
    mode: Mode,
    opts: &RunOptions,
) -> Result<CompressionRun> {
    if e0.cols() != s.d0 {
        return Err(Error::DimensionMismatch { expected: s.d0, found: e0.cols() });
    }
    let started = Instant::now();
    let mut steps = Vec::with_capacity(s.dims.len());
    let mut previous: Option<EmbeddingMatrix> = None;
    for (i, &dim) in s.dims.iter().enumerate() {
        let step = i + 1;
        if let Some(limit) = opts.timeout {
            if started.elapsed() >= limit {
                return Err(Error::Timeout { step: i });
            }
        }
        let seed = step_seed(spec.seed, step);
        let input = match mode {
            Mode::Recursive => previous.as_ref().unwrap_or(e0),
            Mode::Direct => e0,
        };
        let t = Instant::now();
        let fitted = spec.fit_seeded(input, dim, seed).map_err(|e| e.at_step(step))?;
        let out = fitted.transform(input).map_err(|e| e.at_step(step))?;
        let wall_time = t.elapsed();
        let state_bytes = fitted.to_bytes().len();

        let spilled_to = match &opts.spill_dir {
            Some(dir) => {
                let path = dir.join(format!("step_{step}.core"));
                save_matrix(&out, &path, MatrixFormat::Binary).map_err(|e| e.at_step(step))?;
                Some(path)
            }
            None => None,
        };
        let keep = opts.spill_dir.is_none();
        let matrix = match mode {
            Mode::Recursive => {
                let kept = keep.then(|| out.clone());
                previous = Some(out);
                kept
            }
            Mode::Direct => keep.then_some(out),
        };
        steps.push(StepOutput { step, dim, seed, matrix, spilled_to, fitted, wall_time, state_bytes });
    }
    Ok(CompressionRun { schedule: s.clone(), spec: *spec, mode, steps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub dims: Vec<usize>,
    /// `d_{i-1} * d_i * gamma * docs` for each step.
    pub per_step: Vec<u128>,
    pub total: u128,
    pub first_step_fraction: f64,
}

/// Cost of `k` recursive steps under the single-hidden-layer model.
pub fn estimate_cost(d0: usize, kappa: usize, k: usize, gamma: usize, docs: usize) -> Result<CostEstimate> {
    if kappa < 2 {
        return Err(Error::InvalidParameter(format!("kappa must be >= 2, got {kappa}")));
    }
    if k == 0 || d0 == 0 {
        return Err(Error::InvalidParameter("need d0 >= 1 and k >= 1".into()));
    }
    let mut dims = Vec::with_capacity(k);
    let mut d = d0;
    for _ in 0..k {
        d = (d / kappa).max(kappa);
        dims.push(d);
    }
    let mut prev = d0 as u128;
    let per_step: Vec<u128> = dims
        .iter()
        .map(|&di| {
            let c = prev * di as u128 * gamma as u128 * docs as u128;
            prev = di as u128;
            c
        })
        .collect();
    let total: u128 = per_step.iter().sum();
    let first_step_fraction = if total == 0 { 0.0 } else { per_step[0] as f64 / total as f64 };
    Ok(CostEstimate { dims, per_step, total, first_step_fraction })
}

/// `kappa^3 (kappa^{2k} - 1) / (kappa^2 - 1)`: the dimension-product sum when `d0 = kappa^{k+1}`.
pub fn closed_form_cost(kappa: u128, k: u32) -> u128 {
    kappa.pow(3) * (kappa.pow(2 * k) - 1) / (kappa * kappa - 1)
}
