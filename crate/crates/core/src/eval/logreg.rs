//! Multinomial logistic regression with an L2 penalty on the weights,
//! fitted by L-BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::io::LabelVector;
use crate::matrix::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegConfig {
    /// Inverse regularisation strength.
    pub c: f64,
    pub gradient_tolerance: f64,
    pub max_iter: usize,
    pub history: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { c: 1.0, gradient_tolerance: 1e-5, max_iter: 500, history: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    /// `L × d`.
    pub weights: DMatrix<f64>,
    pub intercepts: DVector<f64>,
    pub c: f64,
    pub class_names: Vec<String>,
    /// Objective value after each accepted iteration, starting at the initial point.
    pub objective_trace: Vec<f64>,
}

/// Summed softmax cross-entropy plus `||W||^2 / (2C)`; intercepts are unpenalised.
pub struct Objective<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [usize],
    classes: usize,
    c: f64,
}

impl<'a> Objective<'a> {
    pub fn new(x: &'a DMatrix<f64>, y: &'a [usize], classes: usize, c: f64) -> Self {
        Self { x, y, classes, c }
    }

    pub fn dim(&self) -> usize {
        self.classes * (self.x.ncols() + 1)
    }

    /// Parameters are packed as `W` (row-major, `L × d`) followed by the intercepts.
    pub fn unpack(&self, theta: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let d = self.x.ncols();
        let l = self.classes;
        (DMatrix::from_row_slice(l, d, &theta[..l * d]), DVector::from_column_slice(&theta[l * d..]))
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let (w, b) = self.unpack(theta);
        let mut scores = self.x * w.transpose();
        let mut loss = 0.0;
        for (i, mut row) in scores.row_iter_mut().enumerate() {
            row += b.transpose();
            let max = row.max();
            let target = row[self.y[i]];
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            loss += sum.ln() + max - target;
            row /= sum;
            row[self.y[i]] -= 1.0;
        }
        // scores now holds P - Y
        loss += w.norm_squared() / (2.0 * self.c);
        let gw = scores.transpose() * self.x + &w / self.c;
        let gb = scores.row_sum();
        let mut g = Vec::with_capacity(theta.len());
        for r in 0..gw.nrows() {
            g.extend(gw.row(r).iter());
        }
        g.extend(gb.iter());
        (loss, g)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn train_logreg(x: &EmbeddingMatrix, y: &LabelVector, config: LogRegConfig) -> Result<ClassifierModel> {
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch { rows: x.rows(), labels: y.len() });
    }
    if y.num_classes() < 2 {
        return Err(Error::InvalidParameter("logistic regression needs at least 2 classes".into()));
    }
    if !(config.c > 0.0) {
        return Err(Error::InvalidParameter("C must be positive".into()));
    }
    let xm = x.to_dmatrix();
    let obj = Objective::new(&xm, y.ids(), y.num_classes(), config.c);
    let mut theta = vec![0.0; obj.dim()];
    let (mut f, mut g) = obj.value_and_gradient(&theta);
    let mut trace = vec![f];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for _ in 0..config.max_iter {
        if !f.is_finite() {
            return Err(Error::Diverged { epoch: trace.len(), loss: f });
        }
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= config.gradient_tolerance {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, yv, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = memory.back().map_or_else(
            || 1.0 / g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0),
            |(s, yv, _)| dot(s, yv) / dot(yv, yv),
        );
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, yv, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
            let bcoef = rho * dot(yv, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - bcoef) * si);
        }
        let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            memory.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let (fc, gc) = obj.value_and_gradient(&cand);
            if fc.is_finite() && fc <= f + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            break;
        };
        let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * dot(&yv, &yv).sqrt() * dot(&s, &s).sqrt() {
            if memory.len() == config.history {
                memory.pop_front();
            }
            memory.push_back((s, yv, 1.0 / sy));
        }
        let improvement = f - fc;
        theta = cand;
        f = fc;
        g = gc;
        trace.push(f);
        if improvement <= f64::EPSILON * f.abs().max(1.0) {
            break;
        }
    }
    if !f.is_finite() {
        return Err(Error::Diverged { epoch: trace.len(), loss: f });
    }
    let (weights, intercepts) = obj.unpack(&theta);
    Ok(ClassifierModel {
        weights,
        intercepts,
        c: config.c,
        class_names: y.class_names().to_vec(),
        objective_trace: trace,
    })
}

/// Arg-max of `W x + b` per row; ties go to the lowest class id.
pub fn predict(m: &ClassifierModel, x: &EmbeddingMatrix) -> Result<LabelVector> {
    if x.cols() != m.weights.ncols() {
        return Err(Error::DimensionMismatch { expected: m.weights.ncols(), found: x.cols() });
    }
    let labels = x
        .row_iter()
        .map(|row| {
            let mut best = (0, f64::NEG_INFINITY);
            for c in 0..m.weights.nrows() {
                let s = m.weights.row(c).iter().zip(row).map(|(w, v)| w * v).sum::<f64>() + m.intercepts[c];
                if s > best.1 {
                    best = (c, s);
                }
            }
            best.0
        })
        .collect();
    Ok(LabelVector::predictions(labels, m.class_names.clone()))
}
