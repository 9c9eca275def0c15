#![allow(dead_code)]

use core_repr::seed::rng_from_seed;
use core_repr::EmbeddingMatrix;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = rng_from_seed(seed);
    EmbeddingMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal)).unwrap()
}

/// `rows × cols` matrix of rank `rank` with singular values spread over `[1, 10]`.
pub fn low_rank(rows: usize, cols: usize, rank: usize, seed: u64) -> EmbeddingMatrix {
    let a = gaussian(rows, rank, seed).to_dmatrix();
    let b = gaussian(rank, cols, seed ^ 0xABCD).to_dmatrix();
    EmbeddingMatrix::from_dmatrix(&(a * b)).unwrap()
}

/// Matrix with prescribed, well separated singular values `sigma`.
pub fn with_spectrum(rows: usize, cols: usize, sigma: &[f64], seed: u64) -> EmbeddingMatrix {
    let u = gaussian(rows, sigma.len(), seed).to_dmatrix().qr().q();
    let v = gaussian(cols, sigma.len(), seed ^ 0x1234).to_dmatrix().qr().q();
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(sigma));
    EmbeddingMatrix::from_dmatrix(&(u * s * v.transpose())).unwrap()
}

pub fn gram(m: &EmbeddingMatrix) -> DMatrix<f64> {
    let d = m.to_dmatrix();
    &d * d.transpose()
}

/// Largest absolute entrywise difference between two matrices after flipping
/// columns of `b` to best match `a`.
pub fn max_diff_up_to_sign(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut worst = 0.0f64;
    for c in 0..a.cols() {
        let (x, y) = (a.column(c), b.column(c));
        let plus = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let minus = x.iter().zip(&y).map(|(p, q)| (p + q).abs()).fold(0.0, f64::max);
        worst = worst.max(plus.min(minus));
    }
    worst
}
