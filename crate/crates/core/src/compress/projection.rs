//! Very sparse random projections.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Sparse `d_in × d_out` projection stored column-wise as `(row, sign)` pairs
/// sharing one magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProjection {
    pub d_in: usize,
    pub scale: f64,
    pub columns: Vec<Vec<(usize, i8)>>,
}

impl SparseProjection {
    pub fn d_out(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn density(d_in: usize) -> f64 {
        1.0 / (d_in as f64).sqrt()
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (o, col) in out.iter_mut().zip(&self.columns) {
            let mut acc = 0.0;
            for &(i, s) in col {
                acc += f64::from(s) * row[i];
            }
            *o = acc * self.scale;
        }
    }
}

/// Entries are nonzero with probability `s = 1/sqrt(d_in)`, with equiprobable
/// signs and magnitude `sqrt(1 / (s * d_out))`.
pub fn fit_sparse_projection(d_in: usize, d_out: usize, seed: u64) -> Result<SparseProjection> {
    if d_out == 0 || d_out > d_in {
        return Err(Error::InvalidParameter(format!("projection target {d_out} outside 1..={d_in}")));
    }
    let s = SparseProjection::density(d_in);
    let scale = (1.0 / (s * d_out as f64)).sqrt();
    let mut rng = rng_from_seed(seed);
    let columns = (0..d_out)
        .map(|_| {
            (0..d_in)
                .filter_map(|i| {
                    let u: f64 = rng.random();
                    if u < s / 2.0 {
                        Some((i, -1))
                    } else if u < s {
                        Some((i, 1))
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    Ok(SparseProjection { d_in, scale, columns })
}
