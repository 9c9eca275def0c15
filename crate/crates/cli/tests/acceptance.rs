//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the process
//! exits non-zero if any criterion fails.

use std::cell::OnceCell;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use core_repr::compress::autoencoder::{loss_and_gradients, AutoencoderParams, AutoencoderSize, TrainConfig};
use core_repr::compress::{fit_svd, CompressorKind, CompressorSpec, RandomizedSvdConfig, SvdMode};
use core_repr::eval::logreg::Objective;
use core_repr::eval::metrics::micro_f1_ids;
use core_repr::eval::{epsilon_f1, evaluate_with_plan, fold_plan, LogRegConfig};
use core_repr::experiment::{run_experiment, EvaluationRecord, ExperimentConfig, ResultsTable, RunMetadata, SCHEMA_VERSION};
use core_repr::io::{save_labels, save_matrix, DatasetManifest, ManifestEntry, MatrixFormat};
use core_repr::pipeline::{compress_direct, compress_recursive, estimate_cost};
use core_repr::report::{cd_svg, format_tsv, performance_series, performance_svg, TSV_HEADER};
use core_repr::seed::rng_from_seed;
use core_repr::stats::{average_ranks, friedman_test, nemenyi_cd, RankMatrix, K_MAX, K_MIN};
use core_repr::synth::{synthesize, SynthConfig};
use core_repr::{dimension_schedule, EmbeddingMatrix, Mode};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

const SCHEDULE_BUDGET: Duration = Duration::from_millis(1);
const SVD_BUDGET: Duration = Duration::from_secs(30);
const SYNTH_BUDGET: Duration = Duration::from_secs(120);
const RANDOMIZED_SVD_SLACK: f64 = 1.05;
const SIGN_AGREEMENT_TOL: f64 = 1e-8;
const GRADIENT_REL_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-6;
const GRADIENT_INSTANCES: u64 = 20;
const BENEFICIAL_FLOOR: f64 = -0.02;
const DAMAGE_THRESHOLD: f64 = -0.05;
const SYNTH_SEEDS: u64 = 5;
const SEEDS_REQUIRED: usize = 4;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn embedding(m: &DMatrix<f64>) -> EmbeddingMatrix {
    EmbeddingMatrix::from_dmatrix(m).unwrap()
}

fn c1_schedule() -> Outcome {
    let start = Instant::now();
    let s = dimension_schedule(768, 2).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let expect = vec![384, 192, 96, 48, 24, 12, 6, 3, 2];
    ensure(s.dims == expect, || format!("got {:?}", s.dims))?;
    ensure(s.steps() == 9, || format!("{} steps", s.steps()))?;
    ensure(elapsed < SCHEDULE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("9 steps in {elapsed:?}"))
}

/// `kappa^3 (kappa^(2k) - 1) / (kappa^2 - 1)`, evaluated as a geometric sum.
fn geometric_cost(kappa: u128, k: u32) -> u128 {
    (0..k).map(|i| kappa.pow(3) * kappa.pow(2 * i)).sum()
}

fn c2_cost_model() -> Outcome {
    let mut cases = 0;
    for kappa in [2usize, 3, 4] {
        for k in 1u32..=6 {
            let d0 = kappa.pow(k + 1);
            let c = estimate_cost(d0, kappa, k as usize, 1, 1).map_err(|e| e.to_string())?;
            // direct product of consecutive schedule dimensions
            let dims = dimension_schedule(d0, kappa).map_err(|e| e.to_string())?.dims;
            let mut prev = d0 as u128;
            let summed: u128 = dims[..k as usize]
                .iter()
                .map(|&d| {
                    let p = prev * d as u128;
                    prev = d as u128;
                    p
                })
                .sum();
            let closed = (kappa as u128).pow(3) * ((kappa as u128).pow(2 * k) - 1) / ((kappa as u128).pow(2) - 1);
            ensure(c.total == summed && summed == closed && closed == geometric_cost(kappa as u128, k), || {
                format!("kappa {kappa} k {k}: model {} summed {summed} closed {closed}", c.total)
            })?;
            let bound = (kappa * kappa - 1) as f64 / (kappa * kappa) as f64;
            ensure(c.first_step_fraction >= bound, || {
                format!("kappa {kappa} k {k}: first step {} < {bound}", c.first_step_fraction)
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (kappa, k) cases exact"))
}

fn c3_svd_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(3);
    let mut worst_ratio: f64 = 0.0;
    for i in 0..50u64 {
        let rows = rng.random_range(8..=128);
        let cols = rng.random_range(4..=128);
        let rank = rng.random_range(1..rows.min(cols));
        let a = gaussian(rows, cols, 1000 + i);
        // independent optimum: Frobenius norm of the discarded singular values
        let mut sigma: Vec<f64> = a.clone().singular_values().iter().copied().collect();
        sigma.sort_by(|x, y| y.total_cmp(x));
        let optimum = sigma[rank..].iter().map(|s| s * s).sum::<f64>().sqrt();
        let e = embedding(&a);
        let residual = |mode, seed| -> Result<f64, String> {
            let v = fit_svd(&e, rank, mode, RandomizedSvdConfig::default(), seed).map_err(|e| e.to_string())?.v;
            Ok((&a - &a * &v * v.transpose()).norm())
        };
        let exact = residual(SvdMode::Exact, 0)?;
        let approx = residual(SvdMode::Randomized, i)?;
        ensure((exact - optimum).abs() <= 1e-9 * optimum.max(1.0), || {
            format!("matrix {i}: exact residual {exact} vs optimum {optimum}")
        })?;
        ensure(approx <= RANDOMIZED_SVD_SLACK * exact, || format!("matrix {i} ({rows}x{cols}, r {rank}): {approx} > 1.05 x {exact}"))?;
        if exact > 0.0 {
            worst_ratio = worst_ratio.max(approx / exact);
        }
    }

    let mut worst_diff: f64 = 0.0;
    for i in 0..5u64 {
        let (rows, cols) = (40 + 10 * i as usize, 32);
        let sigma: Vec<f64> = (0..cols).map(|j| 50.0 * 0.85f64.powi(j as i32)).collect();
        let u = gaussian(rows, cols, 2000 + i).qr().q();
        let v = gaussian(cols, cols, 3000 + i).qr().q();
        let e = embedding(&(u * DMatrix::from_diagonal(&DVector::from_vec(sigma.clone())) * v.transpose()));
        let s = dimension_schedule(cols, 2).map_err(|e| e.to_string())?;
        let spec = CompressorSpec::new(CompressorKind::SvdExact, 0);
        let rec = compress_recursive(&e, &spec, &s).map_err(|e| e.to_string())?;
        let dir = compress_direct(&e, &spec, &s).map_err(|e| e.to_string())?;
        for (a, b) in rec.matrices().zip(dir.matrices()) {
            for c in 0..a.cols() {
                let (x, y) = (a.column(c), b.column(c));
                let plus = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                let minus = x.iter().zip(&y).map(|(p, q)| (p + q).abs()).fold(0.0, f64::max);
                worst_diff = worst_diff.max(plus.min(minus));
            }
        }
    }
    ensure(worst_diff <= SIGN_AGREEMENT_TOL, || format!("recursive vs direct differ by {worst_diff:e}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < SVD_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("worst randomized/exact {worst_ratio:.4}, recursive/direct {worst_diff:.1e}, {elapsed:.2?}"))
}

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= GRADIENT_REL_TOL * analytic.abs().max(numeric.abs()) + 1e-9
}

fn autoencoder_gradients(size: AutoencoderSize, seed: u64) -> Result<usize, String> {
    let mut rng = rng_from_seed(seed);
    let (rows, d_in) = (4 + seed as usize % 5, 3 + seed as usize % 3);
    let cfg = TrainConfig { dropout: 0.2, ..Default::default() };
    let mut p = AutoencoderParams::init(d_in, 2, size, cfg, &mut rng).map_err(|e| e.to_string())?;
    for layer in &mut p.layers {
        if let Some(b) = layer.bias.as_mut() {
            b.iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
    }
    let x = gaussian(rows, d_in, seed ^ 77);
    let masks = p.sample_masks(rows, &mut rng);
    let loss = |q: &AutoencoderParams| loss_and_gradients(q, &x, &masks).unwrap().0;
    let (_, grads) = loss_and_gradients(&p, &x, &masks).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for l in 0..p.layers.len() {
        let (r, c) = p.layers[l].weights.shape();
        for i in 0..r {
            for j in 0..c {
                let mut q = p.clone();
                q.layers[l].weights[(i, j)] += FD_STEP;
                let up = loss(&q);
                q.layers[l].weights[(i, j)] -= 2.0 * FD_STEP;
                let fd = (up - loss(&q)) / (2.0 * FD_STEP);
                let g = grads.weights[l][(i, j)];
                ensure(close(g, fd), || format!("{size:?} seed {seed} W{l}[{i},{j}]: {g} vs {fd}"))?;
                checked += 1;
            }
        }
        if let Some(b) = &p.layers[l].bias {
            for i in 0..b.len() {
                let mut q = p.clone();
                q.layers[l].bias.as_mut().unwrap()[i] += FD_STEP;
                let up = loss(&q);
                q.layers[l].bias.as_mut().unwrap()[i] -= 2.0 * FD_STEP;
                let fd = (up - loss(&q)) / (2.0 * FD_STEP);
                let g = grads.bias[l].as_ref().unwrap()[i];
                ensure(close(g, fd), || format!("{size:?} seed {seed} b{l}[{i}]: {g} vs {fd}"))?;
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn logreg_gradients(seed: u64) -> Result<usize, String> {
    let mut rng = rng_from_seed(seed);
    let (rows, d, classes) = (6 + seed as usize % 7, 2 + seed as usize % 4, 2 + seed as usize % 3);
    let c = [0.1, 1.0, 10.0][seed as usize % 3];
    let x = gaussian(rows, d, seed);
    let y: Vec<usize> = (0..rows).map(|_| rng.random_range(0..classes)).collect();
    let obj = Objective::new(&x, &y, classes, c);
    let theta: Vec<f64> = (0..obj.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (_, g) = obj.value_and_gradient(&theta);
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] += FD_STEP;
        let up = obj.value_and_gradient(&t).0;
        t[k] -= 2.0 * FD_STEP;
        let fd = (up - obj.value_and_gradient(&t).0) / (2.0 * FD_STEP);
        ensure(close(g[k], fd), || format!("logreg seed {seed} theta[{k}]: {} vs {fd}", g[k]))?;
    }
    Ok(theta.len())
}

fn c4_gradients() -> Outcome {
    let mut checked = 0;
    for seed in 0..GRADIENT_INSTANCES {
        checked += autoencoder_gradients(AutoencoderSize::Small, seed)?;
        checked += autoencoder_gradients(AutoencoderSize::Large, 100 + seed)?;
        checked += logreg_gradients(seed)?;
    }
    Ok(format!("{checked} partial derivatives over {} instances", 3 * GRADIENT_INSTANCES))
}

/// Five seeded synthetic corpora run through recursive SVD and random subspace.
fn synthetic_run(dir: &Path) -> Result<(ResultsTable, Duration), String> {
    let start = Instant::now();
    let mut entries = Vec::new();
    for seed in 0..SYNTH_SEEDS {
        let d = synthesize(&SynthConfig { seed, ..Default::default() }).map_err(|e| e.to_string())?;
        let name = format!("synthetic-{seed}");
        let embeddings = dir.join(format!("{name}.core"));
        let labels = dir.join(format!("{name}.labels"));
        save_matrix(&d.embeddings, &embeddings, MatrixFormat::Binary).map_err(|e| e.to_string())?;
        save_labels(&d.labels, &labels).map_err(|e| e.to_string())?;
        entries.push(ManifestEntry { name, embeddings, labels, representation: "synthetic".into() });
    }
    let manifest = dir.join("manifest.json");
    DatasetManifest::new(entries).and_then(|m| m.save(&manifest)).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        manifest,
        specs: vec![CompressorSpec::new(CompressorKind::Svd, 0), CompressorSpec::new(CompressorKind::RandomSubspace, 0)],
        kappa: 2,
        modes: vec![Mode::Recursive],
        folds: 3,
        repeats: 3,
        seed: 0,
        margin: 0.05,
        output_dir: dir.join("out"),
        threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        task_timeout: None,
    };
    let t = run_experiment(&cfg).map_err(|e| e.to_string())?;
    ensure(t.failures.is_empty(), || format!("failures: {:?}", t.failures))?;
    Ok((t, start.elapsed()))
}

fn records<'a>(t: &'a ResultsTable, dataset: &'a str, compressor: &'a str) -> impl Iterator<Item = &'a EvaluationRecord> {
    t.records.iter().filter(move |r| r.dataset == dataset && r.compressor == compressor && r.mode == "rec")
}

fn c5_beneficial_steps(run: &Result<(ResultsTable, Duration), String>) -> Outcome {
    let (t, elapsed) = run.as_ref().map_err(Clone::clone)?;
    let mut passing = 0;
    let mut notes = Vec::new();
    for seed in 0..SYNTH_SEEDS {
        let name = format!("synthetic-{seed}");
        let svd: Vec<_> = records(t, &name, "svd").collect();
        let early_ok = svd.iter().filter(|r| r.dim >= 8).all(|r| r.epsilon_f1 >= BENEFICIAL_FLOOR);
        let damage_late = svd.iter().filter(|r| r.epsilon_f1 < DAMAGE_THRESHOLD).all(|r| r.dim < 4);
        let worst_early = svd.iter().filter(|r| r.dim >= 8).map(|r| r.epsilon_f1).fold(f64::INFINITY, f64::min);
        notes.push(format!("{worst_early:+.3}"));
        if early_ok && damage_late && svd.len() == 5 {
            passing += 1;
        }
    }
    ensure(passing >= SEEDS_REQUIRED, || format!("{passing}/{SYNTH_SEEDS} seeds; worst early epsilon {notes:?}"))?;
    ensure(*elapsed < SYNTH_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{passing}/{SYNTH_SEEDS} seeds; worst epsilon at d >= 8 per seed {notes:?}; {elapsed:.1?}"))
}

fn c6_random_subspace(run: &Result<(ResultsTable, Duration), String>) -> Outcome {
    let (t, _) = run.as_ref().map_err(Clone::clone)?;
    let mut passing = 0;
    let mut gaps = Vec::new();
    for seed in 0..SYNTH_SEEDS {
        let name = format!("synthetic-{seed}");
        let at3 = |c| records(t, &name, c).find(|r| r.step == 3).map(|r| r.epsilon_f1);
        let (Some(svd), Some(rs)) = (at3("svd"), at3("random-subspace")) else {
            return Err(format!("{name}: missing step 3"));
        };
        gaps.push(format!("{:+.3}", rs - svd));
        if rs < svd {
            passing += 1;
        }
    }
    ensure(passing >= SEEDS_REQUIRED, || format!("{passing}/{SYNTH_SEEDS} seeds; subspace minus svd {gaps:?}"))?;
    Ok(format!("{passing}/{SYNTH_SEEDS} seeds; subspace minus svd at step 3 {gaps:?}"))
}

/// splitmix64 stream, kept separate from the crate's own generators.
struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: u64) -> usize {
        (self.next() % n) as usize
    }
}

fn c7_micro_f1() -> Outcome {
    let mut g = SplitMix(7);
    for i in 0..1000 {
        let n = 1 + g.below(400);
        let labels = 2 + g.below(12) as u64;
        let truth: Vec<usize> = (0..n).map(|_| g.below(labels)).collect();
        let pred: Vec<usize> = (0..n).map(|_| g.below(labels)).collect();
        let hits = truth.iter().zip(&pred).filter(|(a, b)| a == b).count();
        let accuracy = hits as f64 / n as f64;
        let f1 = micro_f1_ids(&pred, &truth).map_err(|e| e.to_string())?;
        ensure(f1 == accuracy, || format!("vector {i}: micro-F1 {f1} != accuracy {accuracy}"))?;
    }
    Ok("1000 vectors exact".into())
}

fn c8_statistics() -> Outcome {
    let names = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let r = average_ranks(names("m", 3), names("d", 4), vec![vec![0.9, 0.5, 0.1]; 4]).map_err(|e| e.to_string())?;
    let f = friedman_test(&r).map_err(|e| e.to_string())?;
    // 12 N / (k (k + 1)) * (sum R^2 - k (k + 1)^2 / 4) with R = (1, 2, 3)
    let hand = 12.0 * 4.0 / 12.0 * (1.0 + 4.0 + 9.0 - 3.0 * 16.0 / 4.0);
    ensure(f.chi2_f == 8.0 && hand == 8.0, || format!("chi2_F {} (hand {hand})", f.chi2_f))?;

    for k in K_MIN..=K_MAX {
        for n in 1..=40 {
            for alpha in [0.05, 0.10] {
                let a = nemenyi_cd(k, n, alpha).map_err(|e| e.to_string())?;
                let b = nemenyi_cd(k, 4 * n, alpha).map_err(|e| e.to_string())?;
                ensure(b.cd == a.cd / 2.0, || format!("k {k} N {n}: {} vs {}", b.cd, a.cd / 2.0))?;
            }
        }
    }

    let d = synthesize(&SynthConfig { docs: 150, dim: 16, classes: 3, seed: 4, ..Default::default() }).map_err(|e| e.to_string())?;
    let plan = fold_plan(&d.labels, 3, 3, 99).map_err(|e| e.to_string())?;
    let base = evaluate_with_plan(&d.embeddings, &d.labels, &plan, LogRegConfig::default()).map_err(|e| e.to_string())?;
    let identity = d.embeddings.clone();
    let same = evaluate_with_plan(&identity, &d.labels, &plan, LogRegConfig::default()).map_err(|e| e.to_string())?;
    let eps = epsilon_f1(same.mean_f1, base.mean_f1);
    ensure(eps == 0.0, || format!("identity epsilon {eps}"))?;
    Ok("chi2_F = 8, CD(k, 4N) = CD(k, N) / 2, identity epsilon = 0".into())
}

fn write_determinism_inputs(dir: &Path) -> Result<PathBuf, String> {
    let mut entries = Vec::new();
    for seed in 0..3 {
        let d = synthesize(&SynthConfig { docs: 150, dim: 32, classes: 3, rank: 6, seed: 40 + seed, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let name = format!("corpus-{seed}");
        let embeddings = dir.join(format!("{name}.core"));
        let labels = dir.join(format!("{name}.labels"));
        save_matrix(&d.embeddings, &embeddings, MatrixFormat::Binary).map_err(|e| e.to_string())?;
        save_labels(&d.labels, &labels).map_err(|e| e.to_string())?;
        entries.push(ManifestEntry { name, embeddings, labels, representation: "synthetic".into() });
    }
    let manifest = dir.join("manifest.json");
    DatasetManifest::new(entries).and_then(|m| m.save(&manifest)).map_err(|e| e.to_string())?;
    Ok(manifest)
}

fn run_cli(dir: &Path, manifest: &Path, label: &str, threads: usize) -> Result<Vec<u8>, String> {
    let out = dir.join(format!("out-{label}"));
    let config = dir.join(format!("config-{label}.json"));
    let body = serde_json::json!({
        "manifest": manifest,
        "specs": [
            {"kind": "svd", "seed": 1},
            {"kind": "sparse-projection", "seed": 2},
            {"kind": "random-subspace", "seed": 3},
            {"kind": "cluster-median", "seed": 4}
        ],
        "folds": 3,
        "repeats": 2,
        "seed": 2024,
        "output_dir": out,
    });
    fs::write(&config, serde_json::to_vec_pretty(&body).unwrap()).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_core"))
        .args(["run", "--config"])
        .arg(&config)
        .args(["--threads", &threads.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("threads {threads}: exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
    })?;
    fs::read(out.join("results.json")).map_err(|e| e.to_string())
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = write_determinism_inputs(dir.path())?;
    let mut outputs = Vec::new();
    for threads in [1, 4, 8] {
        for attempt in 0..2 {
            let bytes = run_cli(dir.path(), &manifest, &format!("{threads}-{attempt}"), threads)?;
            outputs.push((threads, attempt, bytes));
        }
    }
    let reference = &outputs[0].2;
    for (threads, attempt, bytes) in &outputs {
        ensure(bytes == reference, || format!("threads {threads} run {attempt} differs from threads 1 run 0"))?;
    }
    Ok(format!("6 runs byte-identical ({} bytes)", reference.len()))
}

fn fixture_record(dataset: &str, compressor: &str, step: usize, eps: f64) -> EvaluationRecord {
    EvaluationRecord {
        dataset: dataset.into(),
        representation: "r".into(),
        compressor: compressor.into(),
        mode: if step == 0 { "baseline".into() } else { "rec".into() },
        spec_index: (step > 0).then_some(0),
        step,
        dim: 64 >> step,
        mean_f1: 0.7 + eps,
        std_f1: 0.01,
        epsilon_f1: eps,
        repeats: 1,
        compressor_seeds: vec![],
        fold_f1: vec![0.7 + eps],
    }
}

fn fixture_table(records: Vec<EvaluationRecord>) -> ResultsTable {
    ResultsTable {
        schema_version: SCHEMA_VERSION,
        metadata: RunMetadata {
            tool_version: "fixture".into(),
            base_seed: 0,
            kappa: 2,
            folds: 3,
            repeats: 1,
            margin: 0.05,
            modes: vec![Mode::Recursive],
            specs: vec![],
            manifest: PathBuf::from("manifest.json"),
            evaluation_seeds: vec![],
            classifier: "fixture".into(),
            step_convention: "fixture".into(),
        },
        records,
        failures: vec![],
    }
}

fn count_class(doc: &roxmltree::Document, class: &str) -> usize {
    doc.descendants().filter(|n| n.attribute("class") == Some(class)).count()
}

fn parse_svg(text: &str) -> Result<roxmltree::Document<'_>, String> {
    let doc = roxmltree::Document::parse(text).map_err(|e| format!("malformed SVG: {e}"))?;
    let root = doc.root_element();
    ensure(root.tag_name().name() == "svg" && root.tag_name().namespace() == Some("http://www.w3.org/2000/svg"), || {
        "root is not an SVG element".into()
    })?;
    Ok(doc)
}

fn c10_report() -> Outcome {
    let mut g = SplitMix(10);
    let mut records = Vec::new();
    for i in 0..500 {
        let eps = (g.below(2001) as f64 - 1000.0) / 10_000.0 + if i % 7 == 0 { 0.0 } else { 1e-5 * (i % 3) as f64 - 1e-5 };
        records.push(fixture_record(&format!("d{}", i % 5), "svd", 1 + i % 9, eps));
    }
    records.push(fixture_record("d0", "svd", 1, -0.0001));
    records.push(fixture_record("d0", "svd", 2, 0.0));
    let t = fixture_table(records);
    let tsv = format_tsv(&t).map_err(|e| e.to_string())?;
    let mut lines = tsv.lines();
    ensure(lines.next() == Some(TSV_HEADER), || "header mismatch".into())?;
    let mut rows = 0;
    for (line, r) in lines.zip(&t.records) {
        let cols: Vec<&str> = line.split('\t').collect();
        let expect = if r.epsilon_f1 >= 0.0 { "true" } else { "false" };
        ensure(cols.get(9) == Some(&expect), || format!("row {rows}: {line}"))?;
        rows += 1;
    }
    ensure(rows == t.records.len(), || format!("{rows} rows for {} records", t.records.len()))?;

    let mut perf = Vec::new();
    for (c, slope) in [("svd", -0.01), ("random-subspace", -0.04)] {
        for step in 1..=3 {
            perf.push(fixture_record("d", c, step, slope * step as f64));
        }
    }
    perf.push(fixture_record("d", "baseline", 0, 0.0));
    let series = performance_series(&fixture_table(perf));
    let text = performance_svg(&series, 0.05);
    let doc = parse_svg(&text)?;
    let polylines: Vec<_> = doc.descendants().filter(|n| n.attribute("class") == Some("series")).collect();
    ensure(polylines.len() == 2, || format!("{} series", polylines.len()))?;
    for p in &polylines {
        let points = p.attribute("points").unwrap_or("").split_whitespace().count();
        ensure(points == 3, || format!("{points} points"))?;
    }
    ensure(count_class(&doc, "margin-line") == 1 && count_class(&doc, "zero-line") == 1, || "reference lines".into())?;

    let matrix = |avg: &[f64]| RankMatrix {
        methods: (0..avg.len()).map(|i| format!("m{i}")).collect(),
        datasets: vec!["d".into()],
        scores: vec![avg.iter().map(|r| -r).collect()],
        ranks: vec![avg.to_vec()],
        avg_ranks: avg.to_vec(),
    };
    let cd = nemenyi_cd(3, 10, 0.05).map_err(|e| e.to_string())?;
    let tied = cd_svg(&matrix(&[2.0, 2.0, 2.0]), &cd);
    let doc = parse_svg(&tied)?;
    ensure(count_class(&doc, "method") == 3 && count_class(&doc, "group-bar") == 1, || "tied CD counts".into())?;
    ensure(count_class(&doc, "cd-ruler") == 1 && count_class(&doc, "axis-tick") == 3, || "CD axis counts".into())?;
    let spread = cd_svg(&matrix(&[1.0, 3.0]), &cd);
    let doc = parse_svg(&spread)?;
    ensure(count_class(&doc, "method") == 2 && count_class(&doc, "group-bar") == 0, || "spread CD counts".into())?;
    Ok(format!("{rows} highlight rows, 3 SVGs well-formed"))
}

fn main() -> ExitCode {
    let synth_dir = tempfile::tempdir().expect("temp dir");
    let synth = OnceCell::new();
    let shared = || synth.get_or_init(|| synthetic_run(synth_dir.path()));

    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        ("schedule", Box::new(c1_schedule)),
        ("cost model", Box::new(c2_cost_model)),
        ("svd oracle", Box::new(c3_svd_oracle)),
        ("gradient checks", Box::new(c4_gradients)),
        ("early steps are harmless", Box::new(|| c5_beneficial_steps(shared()))),
        ("random subspace degrades", Box::new(|| c6_random_subspace(shared()))),
        ("micro-F1 equals accuracy", Box::new(c7_micro_f1)),
        ("statistics", Box::new(c8_statistics)),
        ("determinism", Box::new(c9_determinism)),
        ("report fidelity", Box::new(c10_report)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
