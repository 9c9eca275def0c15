//! Extrinsic evaluation: repeated stratified cross-validation of a logistic
//! regression classifier scored by micro-F1.

pub mod folds;
pub mod logreg;
pub mod metrics;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{validate_dataset, LabelVector};
use crate::matrix::EmbeddingMatrix;
use crate::seed::mix64;

pub use folds::{stratified_kfold, FoldAssignment};
pub use logreg::{predict, train_logreg, ClassifierModel, LogRegConfig};
pub use metrics::{epsilon_f1, micro_f1};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub repeat: usize,
    pub fold: usize,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationScores {
    pub mean_f1: f64,
    pub std_f1: f64,
    pub per_fold: Vec<FoldScore>,
}

impl EvaluationScores {
    pub fn from_folds(mut per_fold: Vec<FoldScore>) -> Self {
        per_fold.sort_by_key(|s| (s.repeat, s.fold));
        let n = per_fold.len() as f64;
        let mean_f1 = per_fold.iter().map(|s| s.f1).sum::<f64>() / n;
        let var = per_fold.iter().map(|s| (s.f1 - mean_f1).powi(2)).sum::<f64>() / n;
        Self { mean_f1, std_f1: var.sqrt(), per_fold }
    }
}

/// Fold seed for repeat `repeat`.
pub fn repeat_seed(seed: u64, repeat: usize) -> u64 {
    mix64(seed, repeat as u64)
}

/// The `repeats` fold assignments shared by a baseline and all of its compressed variants.
pub fn fold_plan(y: &LabelVector, k: usize, repeats: usize, seed: u64) -> Result<Vec<FoldAssignment>> {
    (0..repeats).map(|r| stratified_kfold(y, k, repeat_seed(seed, r))).collect()
}

/// Test-fold micro-F1 for every fold of one assignment.
pub fn score_folds(
    e: &EmbeddingMatrix,
    y: &LabelVector,
    folds: &FoldAssignment,
    repeat: usize,
    config: LogRegConfig,
) -> Result<Vec<FoldScore>> {
    (0..folds.k)
        .into_par_iter()
        .map(|fold| {
            let (train, test) = folds.split(fold);
            let model = train_logreg(&e.select_rows(&train)?, &y.select(&train), config)?;
            let pred = predict(&model, &e.select_rows(&test)?)?;
            let f1 = micro_f1(&pred, &y.select(&test))?;
            Ok(FoldScore { repeat, fold, f1 })
        })
        .collect()
}

/// Mean and spread of test-fold micro-F1 over `repeats` independent `k`-fold splits.
pub fn evaluate_representation(
    e: &EmbeddingMatrix,
    y: &LabelVector,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<EvaluationScores> {
    validate_dataset(e, y, k)?;
    let plan = fold_plan(y, k, repeats, seed)?;
    evaluate_with_plan(e, y, &plan, LogRegConfig::default())
}

pub fn evaluate_with_plan(
    e: &EmbeddingMatrix,
    y: &LabelVector,
    plan: &[FoldAssignment],
    config: LogRegConfig,
) -> Result<EvaluationScores> {
    let mut all = Vec::new();
    for (r, folds) in plan.iter().enumerate() {
        all.extend(score_folds(e, y, folds, r, config)?);
    }
    Ok(EvaluationScores::from_folds(all))
}
