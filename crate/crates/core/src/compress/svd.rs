use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, randomized_svd, TruncatedSvd};
use crate::matrix::EmbeddingMatrix;
use crate::seed::rng_from_seed;

/// Largest `min(rows, cols)` accepted by the exact solver.
pub const EXACT_SVD_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvdMode {
    Exact,
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomizedSvdConfig {
    pub oversampling: usize,
    pub power_iterations: usize,
}

impl Default for RandomizedSvdConfig {
    fn default() -> Self {
        Self { oversampling: 10, power_iterations: 5 }
    }
}

/// Truncated SVD factors; `transform` maps rows onto the leading right singular vectors,
/// which yields the `U Σ` scores on the fitting matrix.
pub fn fit_svd(
    e: &EmbeddingMatrix,
    d_out: usize,
    mode: SvdMode,
    config: RandomizedSvdConfig,
    seed: u64,
) -> Result<TruncatedSvd> {
    let limit = e.rows().min(e.cols());
    if d_out == 0 || d_out > limit {
        return Err(Error::InvalidParameter(format!("svd rank {d_out} outside 1..={limit}")));
    }
    let a = e.to_dmatrix();
    match mode {
        SvdMode::Exact => {
            if limit > EXACT_SVD_LIMIT {
                return Err(Error::InvalidParameter(format!(
                    "exact svd limited to min(rows, cols) <= {EXACT_SVD_LIMIT}, got {limit}"
                )));
            }
            Ok(jacobi_svd(&a, d_out))
        }
        SvdMode::Randomized => Ok(randomized_svd(
            &a,
            d_out,
            config.oversampling,
            config.power_iterations,
            &mut rng_from_seed(seed),
        )),
    }
}
