use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::io::LabelVector;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    /// Training and test indices for `fold`, each in ascending document order.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.fold_of.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Shuffles each class's members, then hands them out over the folds.
///
/// Every class sends `floor(n_c / k)` or `ceil(n_c / k)` documents to each fold.
/// The folds receiving the extra documents are first dealt round-robin (largest
/// class first) and then rebalanced so that each fold's class proportions stay
/// within one document of the global proportions.
pub fn stratified_kfold(y: &LabelVector, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    let mut members = vec![Vec::new(); y.num_classes()];
    for (i, &l) in y.ids().iter().enumerate() {
        members[l].push(i);
    }
    for (c, m) in members.iter().enumerate() {
        if m.len() < k {
            return Err(Error::UndersizedClass { class: y.class_names()[c].clone(), count: m.len(), required: k });
        }
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let counts = fold_counts(&sizes, k);
    let mut rng = rng_from_seed(seed);
    let mut fold_of = vec![0; y.len()];
    for (c, m) in members.iter_mut().enumerate() {
        m.shuffle(&mut rng);
        let mut it = m.iter();
        for (f, fold_counts) in counts.iter().enumerate() {
            for &i in it.by_ref().take(fold_counts[c]) {
                fold_of[i] = f;
            }
        }
    }
    Ok(FoldAssignment { fold_of, k, seed })
}

/// Per-fold, per-class document counts (`counts[fold][class]`).
fn fold_counts(sizes: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(sizes[c]), c));
    let mut counts = vec![vec![0usize; sizes.len()]; k];
    let mut next = 0;
    for &c in &order {
        for _ in 0..sizes[c] {
            counts[next][c] += 1;
            next = (next + 1) % k;
        }
    }
    // Move single extras between folds while that lowers the total excess.
    let mut excess = proportion_excess(sizes, &counts);
    while excess > 0 {
        let mut best: Option<(u128, usize, usize, usize)> = None;
        for (c, &n_c) in sizes.iter().enumerate() {
            let base = n_c / k;
            let donors: Vec<usize> = (0..k).filter(|&f| counts[f][c] == base + 1).collect();
            let takers: Vec<usize> = (0..k).filter(|&g| counts[g][c] == base).collect();
            for &f in &donors {
                for &g in &takers {
                    counts[f][c] -= 1;
                    counts[g][c] += 1;
                    let e = proportion_excess(sizes, &counts);
                    counts[f][c] += 1;
                    counts[g][c] -= 1;
                    if e < best.map_or(excess, |b| b.0) {
                        best = Some((e, c, f, g));
                    }
                }
            }
        }
        let Some((e, c, f, g)) = best else { break };
        counts[f][c] -= 1;
        counts[g][c] += 1;
        excess = e;
    }
    counts
}

/// Total amount by which `|count * n - fold_size * n_c|` exceeds `n - 1`,
/// i.e. how far the folds are from proportions within `1 / fold_size` of the global ones.
fn proportion_excess(sizes: &[usize], counts: &[Vec<usize>]) -> u128 {
    let n = sizes.iter().sum::<usize>() as i128;
    let mut total = 0u128;
    for fold in counts {
        let m = fold.iter().sum::<usize>() as i128;
        for (&x, &n_c) in fold.iter().zip(sizes) {
            let gap = (x as i128 * n - m * n_c as i128).abs();
            total += (gap - (n - 1)).max(0) as u128;
        }
    }
    total
}
