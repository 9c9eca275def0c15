//! Feature clustering: KMeans++ over the columns of the embedding matrix,
//! then per-document aggregation of each cluster's values.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Max,
    Mean,
    Median,
}

impl Aggregation {
    pub fn apply(self, values: &mut [f64]) -> f64 {
        match self {
            Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                values.sort_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    0.5 * (values[n / 2 - 1] + values[n / 2])
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Relative inertia improvement below which Lloyd iterations stop.
    pub tolerance: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { max_iter: 100, tolerance: 1e-4 }
    }
}

/// Column-to-cluster map. Clusters are numbered by their smallest member column.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub assignment: Vec<usize>,
    pub clusters: usize,
    pub aggregation: Aggregation,
}

impl ClusterAssignment {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.clusters];
        for (col, &c) in self.assignment.iter().enumerate() {
            m[c].push(col);
        }
        m
    }

    pub fn aggregate(&self, e: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        if e.cols() != self.assignment.len() {
            return Err(Error::DimensionMismatch { expected: self.assignment.len(), found: e.cols() });
        }
        let members = self.members();
        let mut buf = Vec::new();
        let mut out = Vec::with_capacity(e.rows() * self.clusters);
        for row in e.row_iter() {
            for m in &members {
                buf.clear();
                buf.extend(m.iter().map(|&c| row[c]));
                out.push(self.aggregation.apply(&mut buf));
            }
        }
        EmbeddingMatrix::new(e.rows(), self.clusters, out)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// KMeans++ seeding followed by Lloyd iterations on `points`; returns the label of each point.
pub fn kmeans(points: &[Vec<f64>], k: usize, config: KMeansConfig, rng: &mut impl Rng) -> Vec<usize> {
    let n = points.len();
    let mut centers = kmeans_plus_plus(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut prev_inertia = f64::INFINITY;
    for _ in 0..config.max_iter.max(1) {
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, d) = nearest(p, &centers);
            labels[i] = best;
            inertia += d;
        }
        repair_empty(points, &mut labels, &mut centers);
        recompute_centers(points, &labels, &mut centers);
        if inertia == 0.0 || (prev_inertia - inertia) <= config.tolerance * prev_inertia {
            break;
        }
        prev_inertia = inertia;
    }
    // final assignment against the last centroids, then guarantee non-empty clusters
    for (i, p) in points.iter().enumerate() {
        labels[i] = nearest(p, &centers).0;
    }
    repair_empty(points, &mut labels, &mut centers);
    labels
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().zip(&chosen).filter(|(_, c)| !**c).map(|(d, _)| d).sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for i in 0..n {
                if chosen[i] || dist[i] == 0.0 {
                    continue;
                }
                pick = Some(i);
                target -= dist[i];
                if target < 0.0 {
                    break;
                }
            }
            pick.expect("positive mass implies a candidate")
        } else {
            // all remaining points coincide with a center
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[pick]));
        }
        centers.push(points[pick].clone());
    }
    centers
}

fn recompute_centers(points: &[Vec<f64>], labels: &[usize], centers: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; centers.len()];
    let mut counts = vec![0usize; centers.len()];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for ((c, s), &n) in centers.iter_mut().zip(sums).zip(&counts) {
        if n > 0 {
            *c = s.into_iter().map(|v| v / n as f64).collect();
        }
    }
}

/// Moves the point farthest from its centroid (within a cluster of size > 1) into each empty cluster.
fn repair_empty(points: &[Vec<f64>], labels: &mut [usize], centers: &mut [Vec<f64>]) {
    loop {
        let mut counts = vec![0usize; centers.len()];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centers[labels[i]]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= n leaves a cluster with spare members");
        labels[i] = empty;
        centers[empty] = points[i].clone();
    }
}

/// Relabels clusters in order of their smallest member index.
fn canonical_labels(labels: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &l in labels {
        if map[l] == usize::MAX {
            map[l] = next;
            next += 1;
        }
    }
    labels.iter().map(|&l| map[l]).collect()
}

pub fn fit_cluster_aggregate(
    e: &EmbeddingMatrix,
    d_out: usize,
    aggregation: Aggregation,
    config: KMeansConfig,
    seed: u64,
) -> Result<ClusterAssignment> {
    if d_out == 0 || d_out > e.cols() {
        return Err(Error::InvalidParameter(format!("cluster count {d_out} outside 1..={}", e.cols())));
    }
    let points: Vec<Vec<f64>> = (0..e.cols()).map(|c| e.column(c)).collect();
    let mut rng = rng_from_seed(seed);
    let labels = kmeans(&points, d_out, config, &mut rng);
    Ok(ClusterAssignment {
        assignment: canonical_labels(&labels, d_out),
        clusters: d_out,
        aggregation,
    })
}
