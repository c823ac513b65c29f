//! Random forest: bagged CART trees with per-split random feature
//! subsampling and majority voting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_on_rows, FeatureSampler, TreeModel, TreeParams};
use super::{argmax_tie_smallest, derive_seed, Dataset, ModelSpec};
use crate::features::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ForestModel {
    pub trees: Vec<TreeModel>,
}

pub(crate) fn fit(spec: &ModelSpec, data: &Dataset) -> ForestModel {
    let n = data.n_rows();
    let d = data.x.n_cols();
    let k = spec
        .hyper
        .feature_subsample
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .max(1);
    let params = TreeParams {
        min_samples_split: spec.hyper.min_samples_split,
        max_depth: spec.hyper.max_depth,
    };
    let n_classes = data.labels.len();

    let trees: Vec<TreeModel> = (0..spec.hyper.trees.max(1))
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "forest-tree", t as u64));
            let rows: Vec<usize> = if spec.hyper.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let sampler = (k < d).then_some(FeatureSampler { k, rng: &mut rng });
            fit_on_rows(&data.x, &data.y, n_classes, &params, sampler, rows)
        })
        .collect();

    ForestModel { trees }
}

impl ForestModel {
    pub(crate) fn predict(&self, x: &SparseMatrix, n_classes: usize) -> Vec<u32> {
        (0..x.n_rows())
            .map(|row| {
                let mut votes = vec![0.0f64; n_classes];
                for tree in &self.trees {
                    votes[tree.predict_row(x, row) as usize] += 1.0;
                }
                argmax_tie_smallest(&votes)
            })
            .collect()
    }
}
