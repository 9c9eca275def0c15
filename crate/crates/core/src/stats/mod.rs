//! Average ranks, the Friedman test, Nemenyi critical distances and the
//! grouping shown in critical-difference diagrams.

mod nemenyi_table;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

pub use nemenyi_table::{K_MAX, K_MIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMatrix {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// `N × k`, higher is better.
    pub scores: Vec<Vec<f64>>,
    /// `N × k`, rank 1 is best; ties share the average rank.
    pub ranks: Vec<Vec<f64>>,
    pub avg_ranks: Vec<f64>,
}

impl RankMatrix {
    pub fn k(&self) -> usize {
        self.methods.len()
    }

    pub fn n(&self) -> usize {
        self.datasets.len()
    }
}

/// Ranks of `row` in descending order, averaging over ties.
pub fn rank_descending(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        // positions i..=j share ranks i+1..=j+1
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn average_ranks(methods: Vec<String>, datasets: Vec<String>, scores: Vec<Vec<f64>>) -> Result<RankMatrix> {
    let k = methods.len();
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 methods, got {k}")));
    }
    if scores.is_empty() || scores.len() != datasets.len() {
        return Err(Error::InvalidParameter(format!(
            "{} score rows for {} datasets",
            scores.len(),
            datasets.len()
        )));
    }
    for (i, row) in scores.iter().enumerate() {
        if row.len() != k {
            return Err(Error::RaggedRow { row: i + 1, expected: k, found: row.len() });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i + 1, col: j + 1 });
        }
    }
    let ranks: Vec<Vec<f64>> = scores.iter().map(|r| rank_descending(r)).collect();
    let n = ranks.len() as f64;
    let avg_ranks = (0..k).map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    Ok(RankMatrix { methods, datasets, scores, ranks, avg_ranks })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2_f: f64,
    pub p_value: f64,
    /// Iman-Davenport statistic and p-value; absent when the chi-square
    /// statistic saturates its denominator.
    pub iman_davenport: Option<(f64, f64)>,
}

/// Friedman chi-square statistic with `k - 1` degrees of freedom.
pub fn friedman_test(r: &RankMatrix) -> Result<FriedmanResult> {
    let (k, n) = (r.k(), r.n());
    if n < 2 || k < 2 {
        return Err(Error::InvalidParameter(format!("friedman test needs N >= 2 and k >= 2, got N={n}, k={k}")));
    }
    let (kf, nf) = (k as f64, n as f64);
    let sum_sq: f64 = r.avg_ranks.iter().map(|v| v * v).sum();
    let chi2 = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let chi = ChiSquared::new(kf - 1.0).expect("k >= 2");
    let p_value = chi.sf(chi2);
    let denom = nf * (kf - 1.0) - chi2;
    let iman_davenport = (denom > 0.0).then(|| {
        let f = (nf - 1.0) * chi2 / denom;
        let dist = FisherSnedecor::new(kf - 1.0, (kf - 1.0) * (nf - 1.0)).expect("positive dof");
        (f, dist.sf(f))
    });
    Ok(FriedmanResult { chi2_f: chi2, p_value, iman_davenport })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalDistance {
    pub alpha: f64,
    pub q_alpha: f64,
    pub cd: f64,
}

/// Nemenyi q for `k` methods at `alpha` (0.05 or 0.10).
pub fn nemenyi_q(k: usize, alpha: f64) -> Result<f64> {
    if !(K_MIN..=K_MAX).contains(&k) {
        return Err(Error::InvalidParameter(format!("k = {k} outside tabulated {K_MIN}..={K_MAX}")));
    }
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &nemenyi_table::Q_005
    } else if (alpha - 0.10).abs() < 1e-12 {
        &nemenyi_table::Q_010
    } else {
        return Err(Error::InvalidParameter(format!("alpha {alpha} not tabulated (use 0.05 or 0.10)")));
    };
    Ok(table[k - K_MIN])
}

/// `q_alpha * sqrt(k (k + 1) / (6 N))`.
pub fn nemenyi_cd(k: usize, n_datasets: usize, alpha: f64) -> Result<CriticalDistance> {
    if n_datasets == 0 {
        return Err(Error::InvalidParameter("need at least one dataset".into()));
    }
    let q = nemenyi_q(k, alpha)?;
    let kf = k as f64;
    let cd = q * (kf * (kf + 1.0) / (6.0 * n_datasets as f64)).sqrt();
    Ok(CriticalDistance { alpha, q_alpha: q, cd })
}

/// Methods whose average ranks lie within one critical distance of each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankGroup {
    /// Best-ranked first.
    pub members: Vec<String>,
    pub lo_rank: f64,
    pub hi_rank: f64,
}

/// Maximal runs of the rank-sorted methods whose pairwise gaps are all below `cd`.
///
/// Every method appears in at least one group; singletons are kept.
pub fn cd_diagram_layout(r: &RankMatrix, cd: &CriticalDistance) -> Vec<RankGroup> {
    let mut order: Vec<usize> = (0..r.k()).collect();
    order.sort_by(|&a, &b| r.avg_ranks[a].total_cmp(&r.avg_ranks[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| r.avg_ranks[i]).collect();
    let mut groups: Vec<RankGroup> = Vec::new();
    let mut last_end = None;
    for start in 0..sorted.len() {
        let mut end = start;
        while end + 1 < sorted.len() && sorted[end + 1] - sorted[start] < cd.cd {
            end += 1;
        }
        // a run ending where the previous one ended is contained in it
        if last_end.is_some_and(|e| end <= e) {
            continue;
        }
        last_end = Some(end);
        groups.push(RankGroup {
            members: order[start..=end].iter().map(|&i| r.methods[i].clone()).collect(),
            lo_rank: sorted[start],
            hi_rank: sorted[end],
        });
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    pub avg_ranks: Vec<f64>,
    pub chi2_f: f64,
    pub p_value: f64,
    pub iman_davenport: Option<(f64, f64)>,
    pub alpha: f64,
    pub q_alpha: f64,
    pub cd: f64,
    pub groups: Vec<RankGroup>,
}

pub fn summarize(r: &RankMatrix, alpha: f64) -> Result<RankSummary> {
    let fr = friedman_test(r)?;
    let cd = nemenyi_cd(r.k(), r.n(), alpha)?;
    Ok(RankSummary {
        methods: r.methods.clone(),
        datasets: r.datasets.clone(),
        avg_ranks: r.avg_ranks.clone(),
        chi2_f: fr.chi2_f,
        p_value: fr.p_value,
        iman_davenport: fr.iman_davenport,
        alpha,
        q_alpha: cd.q_alpha,
        cd: cd.cd,
        groups: cd_diagram_layout(r, &cd),
    })
}
