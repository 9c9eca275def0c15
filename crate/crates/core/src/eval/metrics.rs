use crate::error::{Error, Result};
use crate::io::LabelVector;

/// Micro-averaged F1 from pooled per-class true positives, false positives and false negatives.
pub fn micro_f1(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    micro_f1_ids(pred.ids(), truth.ids())
}

pub fn micro_f1_ids(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch { rows: pred.len(), labels: truth.len() });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let classes = pred.iter().chain(truth).copied().max().unwrap() + 1;
    let mut tp = vec![0u64; classes];
    let mut fp = vec![0u64; classes];
    let mut fn_ = vec![0u64; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let tp: u64 = tp.iter().sum();
    let fp: u64 = fp.iter().sum();
    let fn_: u64 = fn_.iter().sum();
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 { 0.0 } else { (2 * tp) as f64 / denom as f64 })
}

/// `f1_compressed - f1_initial`; positive when compression helped.
pub fn epsilon_f1(f1_compressed: f64, f1_initial: f64) -> f64 {
    f1_compressed - f1_initial
}
