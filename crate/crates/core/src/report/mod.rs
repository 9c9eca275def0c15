//! Tables, JSON and SVG figures from experiment results.

mod svg;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{EvaluationRecord, ResultsTable};
use crate::stats::{average_ranks, RankMatrix};

pub use svg::{cd_svg, performance_svg, rank_to_x, CD_AXIS_LEFT, CD_AXIS_RIGHT, HEIGHT, WIDTH};

pub const TSV_HEADER: &str = "dataset\trepresentation\tcompressor\tmode\tstep\tdim\tmean_f1\tstd_f1\tepsilon_f1\thighlight";

/// Highlight rule: non-negative epsilon-F1 at full precision.
pub fn highlight(epsilon_f1: f64) -> bool {
    epsilon_f1 >= 0.0
}

pub fn format_tsv(t: &ResultsTable) -> Result<String> {
    if t.records.is_empty() {
        return Err(Error::InvalidParameter("results table has no records".into()));
    }
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for r in &t.records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{}\n",
            r.dataset,
            r.representation,
            r.compressor,
            r.mode,
            r.step,
            r.dim,
            r.mean_f1,
            r.std_f1,
            r.epsilon_f1,
            highlight(r.epsilon_f1)
        ));
    }
    Ok(out)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the rounded TSV table and its full-precision JSON twin (same stem, `.json`).
pub fn emit_tsv(t: &ResultsTable, path: &Path) -> Result<()> {
    write(path, &format_tsv(t)?)?;
    emit_json(t, &path.with_extension("json"))
}

pub fn to_json(t: &ResultsTable) -> Result<String> {
    let mut sorted = t.clone();
    sorted.sort();
    Ok(serde_json::to_string_pretty(&sorted)? + "\n")
}

pub fn emit_json(t: &ResultsTable, path: &Path) -> Result<()> {
    write(path, &to_json(t)?)
}

pub fn load_json(path: &Path) -> Result<ResultsTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// One line per method: mean epsilon-F1 across datasets at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceSeries {
    pub method: String,
    pub points: Vec<(usize, f64)>,
}

pub fn performance_series(t: &ResultsTable) -> Vec<PerformanceSeries> {
    let mut acc: BTreeMap<String, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in t.compressed() {
        let e = acc.entry(r.method()).or_default().entry(r.step).or_insert((0.0, 0));
        e.0 += r.epsilon_f1;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(method, steps)| PerformanceSeries {
            method,
            points: steps.into_iter().map(|(s, (sum, n))| (s, sum / n as f64)).collect(),
        })
        .collect()
}

pub fn emit_performance_svg(t: &ResultsTable, margin: f64, path: &Path) -> Result<()> {
    let series = performance_series(t);
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InvalidParameter("no compression steps to plot".into()));
    }
    write(path, &performance_svg(&series, margin))
}

pub fn emit_cd_svg(r: &RankMatrix, cd: &crate::stats::CriticalDistance, path: &Path) -> Result<()> {
    write(path, &cd_svg(r, cd))
}

/// Ranks methods per dataset by epsilon-F1 at step `tau`, or by the mean over
/// all steps when `tau` is `None`. Datasets missing any method are dropped.
pub fn rank_matrix_from_records(t: &ResultsTable, tau: Option<usize>) -> Result<RankMatrix> {
    let mut cells: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    let mut methods = BTreeSet::new();
    let mut datasets = BTreeSet::new();
    let chosen = |r: &&EvaluationRecord| tau.is_none_or(|s| r.step == s);
    for r in t.compressed().filter(chosen) {
        methods.insert(r.method());
        datasets.insert(r.dataset.clone());
        let c = cells.entry((r.dataset.clone(), r.method())).or_insert((0.0, 0));
        c.0 += r.epsilon_f1;
        c.1 += 1;
    }
    let methods: Vec<String> = methods.into_iter().collect();
    let mut rows = Vec::new();
    let mut kept = Vec::new();
    for d in datasets {
        let row: Option<Vec<f64>> = methods
            .iter()
            .map(|m| cells.get(&(d.clone(), m.clone())).map(|(s, n)| s / *n as f64))
            .collect();
        if let Some(row) = row {
            rows.push(row);
            kept.push(d);
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter(match tau {
            Some(s) => format!("no dataset has every method at step {s}"),
            None => "no dataset has every method".into(),
        }));
    }
    average_ranks(methods, kept, rows)
}
