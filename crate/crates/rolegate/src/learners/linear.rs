//! Linear classifiers over sparse rows: L2-regularized logistic regression
//! fitted by batch gradient descent with 1/sqrt(t) step decay, and a ridge
//! classifier solved by conjugate gradients on the normal equations.
//!
//! Both use one-vs-rest across the label set (binary problems included);
//! prediction takes the argmax score with ties to the smallest label id.

use serde::{Deserialize, Serialize};

use super::{argmax_tie_smallest, Dataset, ModelSpec};
use crate::features::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub(crate) enum LinearKind {
    Logistic,
    Ridge,
}

/// Per-class weight vectors; the last component is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LinearModel {
    pub kind: LinearKind,
    pub weights: Vec<Vec<f64>>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn score(row: &[(u32, f64)], w: &[f64]) -> f64 {
    SparseMatrix::row_dot_dense(row, w) + w[w.len() - 1]
}

pub(crate) fn fit_logistic(spec: &ModelSpec, data: &Dataset) -> LinearModel {
    let n = data.n_rows() as f64;
    let d = data.x.n_cols();
    let lambda = spec.hyper.lambda;

    let weights = (0..data.labels.len())
        .map(|class| {
            let targets: Vec<f64> = data
                .y
                .iter()
                .map(|&y| if y as usize == class { 1.0 } else { 0.0 })
                .collect();
            let mut w = vec![0.0f64; d + 1];
            let mut grad = vec![0.0f64; d + 1];
            for t in 1..=spec.hyper.iterations {
                grad.iter_mut().for_each(|g| *g = 0.0);
                for i in 0..data.n_rows() {
                    let row = data.x.row(i);
                    let err = sigmoid(score(row, &w)) - targets[i];
                    for &(c, v) in row {
                        grad[c as usize] += err * v;
                    }
                    grad[d] += err;
                }
                // L2 on feature weights, not the intercept.
                for j in 0..d {
                    grad[j] = grad[j] / n + lambda * w[j] / n;
                }
                grad[d] /= n;
                let step = spec.hyper.step / (t as f64).sqrt();
                for j in 0..=d {
                    w[j] -= step * grad[j];
                }
            }
            w
        })
        .collect();

    LinearModel {
        kind: LinearKind::Logistic,
        weights,
    }
}

/// Applies `(X^T X + lambda I) v` without materializing `X^T X`. The input
/// matrix is implicitly augmented with a constant-1 intercept column, which
/// is regularized along with the rest.
fn normal_matvec(x: &SparseMatrix, lambda: f64, v: &[f64]) -> Vec<f64> {
    let d = x.n_cols();
    let mut out = vec![0.0f64; d + 1];
    for i in 0..x.n_rows() {
        let row = x.row(i);
        let u = SparseMatrix::row_dot_dense(row, v) + v[d];
        for &(c, val) in row {
            out[c as usize] += u * val;
        }
        out[d] += u;
    }
    for j in 0..=d {
        out[j] += lambda * v[j];
    }
    out
}

fn conjugate_gradient(x: &SparseMatrix, lambda: f64, b: &[f64]) -> Vec<f64> {
    let dim = b.len();
    let mut w = vec![0.0f64; dim];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs_old: f64 = r.iter().map(|v| v * v).sum();
    let b_norm: f64 = rs_old.max(1e-300);
    for _ in 0..dim.min(500) {
        if rs_old / b_norm < 1e-24 {
            break;
        }
        let ap = normal_matvec(x, lambda, &p);
        let p_ap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if p_ap.abs() < 1e-300 {
            break;
        }
        let alpha = rs_old / p_ap;
        for j in 0..dim {
            w[j] += alpha * p[j];
            r[j] -= alpha * ap[j];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs_old;
        for j in 0..dim {
            p[j] = r[j] + beta * p[j];
        }
        rs_old = rs_new;
    }
    w
}

pub(crate) fn fit_ridge(spec: &ModelSpec, data: &Dataset) -> LinearModel {
    let d = data.x.n_cols();
    let weights = (0..data.labels.len())
        .map(|class| {
            // Regularized least squares on +-1 targets.
            let mut b = vec![0.0f64; d + 1];
            for i in 0..data.n_rows() {
                let t = if data.y[i] as usize == class { 1.0 } else { -1.0 };
                for &(c, v) in data.x.row(i) {
                    b[c as usize] += t * v;
                }
                b[d] += t;
            }
            conjugate_gradient(&data.x, spec.hyper.lambda, &b)
        })
        .collect();

    LinearModel {
        kind: LinearKind::Ridge,
        weights,
    }
}

impl LinearModel {
    pub(crate) fn predict(&self, x: &SparseMatrix) -> Vec<u32> {
        (0..x.n_rows())
            .map(|i| {
                let scores: Vec<f64> = self
                    .weights
                    .iter()
                    .map(|w| score(x.row(i), w))
                    .collect();
                argmax_tie_smallest(&scores)
            })
            .collect()
    }
}
