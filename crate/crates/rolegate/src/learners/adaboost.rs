//! AdaBoost (SAMME) over depth-1 decision stumps.
//!
//! Each round fits the stump minimizing weighted misclassification error.
//! A round whose error reaches `1 - 1/K` stops training (SAMME validity);
//! a perfect stump is kept and stops training with a capped error.

use serde::{Deserialize, Serialize};

use super::{argmax_tie_smallest, majority_label, Dataset, ModelSpec};
use crate::features::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Stump {
    pub feature: u32,
    pub threshold: f64,
    pub left_label: u32,
    pub right_label: u32,
}

impl Stump {
    fn predict_row(&self, x: &SparseMatrix, row: usize) -> u32 {
        if x.get(row, self.feature) <= self.threshold {
            self.left_label
        } else {
            self.right_label
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct AdaboostModel {
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
    /// Weighted training error of each selected stump, for auditability.
    pub errors: Vec<f64>,
    /// Constant fallback when no stump could be selected.
    pub fallback: u32,
}

/// Best stump by weighted error; ties keep the first (lowest feature, then
/// lowest threshold). Returns None when every feature is constant.
fn fit_stump(
    x: &SparseMatrix,
    y: &[u32],
    weights: &[f64],
    n_classes: usize,
) -> Option<(Stump, f64)> {
    let n = x.n_rows();
    let total_weight: f64 = weights.iter().sum();
    let mut best: Option<(Stump, f64)> = None;

    for feature in 0..x.n_cols() as u32 {
        let mut values: Vec<(f64, u32, f64)> = (0..n)
            .map(|i| (x.get(i, feature), y[i], weights[i]))
            .collect();
        values.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

        let mut total = vec![0.0f64; n_classes];
        for &(_, label, w) in &values {
            total[label as usize] += w;
        }
        let mut left = vec![0.0f64; n_classes];
        for i in 0..n - 1 {
            left[values[i].1 as usize] += values[i].2;
            if values[i].0 == values[i + 1].0 {
                continue;
            }
            let threshold = values[i].0 + (values[i + 1].0 - values[i].0) / 2.0;
            if !(threshold >= values[i].0 && threshold < values[i + 1].0) {
                continue;
            }
            let right: Vec<f64> = total.iter().zip(&left).map(|(&t, &l)| t - l).collect();
            let left_label = argmax_tie_smallest(&left);
            let right_label = argmax_tie_smallest(&right);
            let err = total_weight - left[left_label as usize] - right[right_label as usize];
            if best.as_ref().is_none_or(|(_, e)| err < e - 1e-15) {
                best = Some((
                    Stump {
                        feature,
                        threshold,
                        left_label,
                        right_label,
                    },
                    err,
                ));
            }
        }
    }
    best
}

pub(crate) fn fit(spec: &ModelSpec, data: &Dataset) -> AdaboostModel {
    let n = data.n_rows();
    let n_classes = data.labels.len();
    let fallback = majority_label(&data.y, n_classes);

    let mut present: Vec<bool> = vec![false; n_classes];
    for &label in &data.y {
        present[label as usize] = true;
    }
    let k = present.iter().filter(|&&p| p).count();

    let mut model = AdaboostModel {
        stumps: Vec::new(),
        alphas: Vec::new(),
        errors: Vec::new(),
        fallback,
    };
    if k < 2 {
        return model;
    }

    let mut weights = vec![1.0 / n as f64; n];
    let validity_bound = 1.0 - 1.0 / k as f64;

    for _ in 0..spec.hyper.rounds {
        let Some((stump, err)) = fit_stump(&data.x, &data.y, &weights, n_classes) else {
            break;
        };
        if err >= validity_bound {
            break;
        }
        let clamped = err.max(1e-12);
        let alpha = ((1.0 - clamped) / clamped).ln() + ((k - 1) as f64).ln();
        let misclassified: Vec<bool> = (0..n)
            .map(|i| stump.predict_row(&data.x, i) != data.y[i])
            .collect();
        model.stumps.push(stump);
        model.alphas.push(alpha);
        model.errors.push(err);
        if err <= 1e-12 {
            break;
        }
        for (w, &mis) in weights.iter_mut().zip(&misclassified) {
            if mis {
                *w *= alpha.exp();
            }
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
    }
    model
}

impl AdaboostModel {
    pub(crate) fn predict(&self, x: &SparseMatrix, n_classes: usize) -> Vec<u32> {
        (0..x.n_rows())
            .map(|row| {
                if self.stumps.is_empty() {
                    return self.fallback;
                }
                let mut scores = vec![0.0f64; n_classes];
                for (stump, &alpha) in self.stumps.iter().zip(&self.alphas) {
                    scores[stump.predict_row(x, row) as usize] += alpha;
                }
                argmax_tie_smallest(&scores)
            })
            .collect()
    }
}
