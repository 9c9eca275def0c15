//! Random feature subspaces followed by per-row l2 normalisation.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::matrix::EmbeddingMatrix;
use crate::seed::rng_from_seed;

/// `d_out` distinct column indices drawn uniformly without replacement.
pub fn sample_columns(d_in: usize, d_out: usize, seed: u64) -> Result<Vec<usize>> {
    if d_out == 0 || d_out > d_in {
        return Err(Error::InvalidParameter(format!("subspace size {d_out} outside 1..={d_in}")));
    }
    let mut rng = rng_from_seed(seed);
    Ok(sample(&mut rng, d_in, d_out).into_vec())
}

pub fn project_subspace(e: &EmbeddingMatrix, columns: &[usize]) -> Result<EmbeddingMatrix> {
    let mut out = Vec::with_capacity(e.rows() * columns.len());
    for row in e.row_iter() {
        let start = out.len();
        out.extend(columns.iter().map(|&c| row[c]));
        let norm = out[start..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            out[start..].iter_mut().for_each(|v| *v /= norm);
        }
    }
    EmbeddingMatrix::new(e.rows(), columns.len(), out)
}

pub fn random_subspace(e: &EmbeddingMatrix, d_out: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let cols = sample_columns(e.cols(), d_out, seed)?;
    project_subspace(e, &cols)
}
