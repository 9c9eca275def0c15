//! Dense truncated SVD: one-sided Jacobi for exact factors and a randomized
//! range finder for large inputs.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Right singular vectors (columns) and singular values, sorted descending.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub v: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

/// Full SVD by one-sided (Hestenes) Jacobi rotations, truncated to `rank`.
///
/// Columns of `a` are orthogonalised in place while the rotations are
/// accumulated into `V`; the converged column norms are the singular values.
pub fn jacobi_svd(a: &DMatrix<f64>, rank: usize) -> TruncatedSvd {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j).iter().copied().collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    const MAX_SWEEPS: usize = 60;
    let tol = f64::EPSILON * (m.max(n) as f64);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (alpha, beta, gamma) = {
                    let (ci, cj) = (&cols[i], &cols[j]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for k in 0..m {
                        alpha += ci[k] * ci[k];
                        beta += cj[k] * cj[k];
                        gamma += ci[k] * cj[k];
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));
    order.truncate(rank);

    let vt = DMatrix::from_fn(n, order.len(), |r, c| v[order[c]][r]);
    let sv = order.iter().map(|&j| norms[j]).collect();
    let mut out = TruncatedSvd { v: vt, singular_values: sv };
    canonicalize_signs(&mut out.v);
    out
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    let (ci, cj) = (&mut lo[i], &mut hi[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Flips each column so that its largest-magnitude entry is positive.
pub fn canonicalize_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let mut best = 0.0f64;
        for &x in col.iter() {
            if x.abs() > best.abs() {
                best = x;
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
}

/// Randomized truncated SVD with Gaussian sketching, `oversampling` extra
/// columns and `power_iterations` rounds of re-orthonormalised subspace iteration.
pub fn randomized_svd<R: Rng + ?Sized>(
    a: &DMatrix<f64>,
    rank: usize,
    oversampling: usize,
    power_iterations: usize,
    rng: &mut R,
) -> TruncatedSvd {
    let (m, n) = a.shape();
    let width = (rank + oversampling).min(m.min(n));
    let omega = DMatrix::from_fn(n, width, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = orthonormal_basis(a * omega);
    for _ in 0..power_iterations {
        let z = orthonormal_basis(a.transpose() * &q);
        q = orthonormal_basis(a * z);
    }
    let b = q.transpose() * a;
    let svd = b.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]).then(x.cmp(&y)));
    order.truncate(rank);
    let mut v = DMatrix::from_fn(n, order.len(), |r, c| v_t[(order[c], r)]);
    canonicalize_signs(&mut v);
    TruncatedSvd {
        v,
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
    }
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}
