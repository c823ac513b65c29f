//! CART classification tree: greedy binary splits on feature thresholds,
//! Gini impurity, midpoint threshold candidates between consecutive distinct
//! sorted values.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::argmax_tie_smallest;
use crate::features::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub(crate) enum TreeNode {
    Leaf {
        label: u32,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct TreeModel {
    pub nodes: Vec<TreeNode>,
}

pub(crate) struct TreeParams {
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
}

/// Per-split feature subsampling used by random forests.
pub(crate) struct FeatureSampler<'a> {
    pub k: usize,
    pub rng: &'a mut ChaCha8Rng,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

struct Builder<'a> {
    x: &'a SparseMatrix,
    y: &'a [u32],
    n_classes: usize,
    params: &'a TreeParams,
    sampler: Option<FeatureSampler<'a>>,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    gain: f64,
    feature: u32,
    threshold: f64,
}

impl Builder<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &r in rows {
            counts[self.y[r] as usize] += 1;
        }
        counts
    }

    fn candidate_features(&mut self) -> Vec<u32> {
        let d = self.x.n_cols() as u32;
        match &mut self.sampler {
            Some(sampler) if sampler.k < d as usize => {
                let mut all: Vec<u32> = (0..d).collect();
                all.shuffle(sampler.rng);
                let mut picked: Vec<u32> = all.into_iter().take(sampler.k).collect();
                picked.sort_unstable();
                picked
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize], parent_gini: f64) -> Option<BestSplit> {
        let n = rows.len();
        let mut best: Option<BestSplit> = None;
        for feature in self.candidate_features() {
            let mut values: Vec<(f64, u32)> = rows
                .iter()
                .map(|&r| (self.x.get(r, feature), self.y[r]))
                .collect();
            values.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

            let mut left_counts = vec![0usize; self.n_classes];
            let total_counts = {
                let mut c = vec![0usize; self.n_classes];
                for &(_, label) in &values {
                    c[label as usize] += 1;
                }
                c
            };
            for i in 0..n - 1 {
                left_counts[values[i].1 as usize] += 1;
                if values[i].0 == values[i + 1].0 {
                    continue;
                }
                let threshold = values[i].0 + (values[i + 1].0 - values[i].0) / 2.0;
                // Degenerate midpoints (adjacent floats) would make a side empty.
                if !(threshold >= values[i].0 && threshold < values[i + 1].0) {
                    continue;
                }
                let n_left = i + 1;
                let n_right = n - n_left;
                let right_counts: Vec<usize> = total_counts
                    .iter()
                    .zip(&left_counts)
                    .map(|(&t, &l)| t - l)
                    .collect();
                let weighted = (n_left as f64 * gini(&left_counts, n_left)
                    + n_right as f64 * gini(&right_counts, n_right))
                    / n as f64;
                let gain = parent_gini - weighted;
                // Any valid split is acceptable (zero-gain splits can still
                // enable pure grandchildren); ties keep the first candidate.
                if best.as_ref().is_none_or(|b| gain > b.gain + 1e-12) {
                    best = Some(BestSplit {
                        gain,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> u32 {
        let counts = self.class_counts(&rows);
        let majority =
            argmax_tie_smallest(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
        let parent_gini = gini(&counts, rows.len());

        let depth_capped = self.params.max_depth.is_some_and(|cap| depth >= cap);
        if parent_gini == 0.0 || rows.len() < self.params.min_samples_split || depth_capped {
            self.nodes.push(TreeNode::Leaf { label: majority });
            return (self.nodes.len() - 1) as u32;
        }
        let Some(split) = self.best_split(&rows, parent_gini) else {
            self.nodes.push(TreeNode::Leaf { label: majority });
            return (self.nodes.len() - 1) as u32;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.x.get(r, split.feature) <= split.threshold);
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let index = self.nodes.len() as u32;
        self.nodes.push(TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        if let TreeNode::Split {
            left: l, right: r, ..
        } = &mut self.nodes[index as usize]
        {
            *l = left;
            *r = right;
        }
        index
    }
}

/// Fits a tree on the given rows (all rows when `rows` is None).
pub(crate) fn fit_on_rows(
    x: &SparseMatrix,
    y: &[u32],
    n_classes: usize,
    params: &TreeParams,
    sampler: Option<FeatureSampler<'_>>,
    rows: Vec<usize>,
) -> TreeModel {
    let mut builder = Builder {
        x,
        y,
        n_classes,
        params,
        sampler,
        nodes: Vec::new(),
    };
    builder.build(rows, 0);
    TreeModel {
        nodes: builder.nodes,
    }
}

pub(crate) fn fit(
    x: &SparseMatrix,
    y: &[u32],
    n_classes: usize,
    params: &TreeParams,
    sampler: Option<FeatureSampler<'_>>,
) -> TreeModel {
    fit_on_rows(x, y, n_classes, params, sampler, (0..x.n_rows()).collect())
}

impl TreeModel {
    pub(crate) fn predict_row(&self, x: &SparseMatrix, row: usize) -> u32 {
        let mut node = 0u32;
        loop {
            match &self.nodes[node as usize] {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x.get(row, *feature) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}
