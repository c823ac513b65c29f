//! From-scratch classifier suite: majority baseline, CART decision tree,
//! random forest, KNN, logistic regression, ridge classifier, and AdaBoost
//! (SAMME) over depth-1 stumps.
//!
//! All models operate on sparse rows natively, are deterministic given
//! `(spec, data)`, and only ever predict labels from the training label set.
//! Ties everywhere resolve to the lexicographically smallest label, which is
//! the lowest id because label sets are sorted at construction.

mod adaboost;
mod forest;
mod knn;
mod linear;
mod tree;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::SparseMatrix;

pub(crate) use adaboost::AdaboostModel;
pub(crate) use forest::ForestModel;
pub(crate) use knn::KnnModel;
pub(crate) use linear::LinearModel;
pub(crate) use tree::TreeModel;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("feature count mismatch: model expects {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("bad model container: {0}")]
    BadContainer(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An ordered label alphabet. Names are sorted lexicographically, so label
/// ids order the same way names do.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> LabelSet {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        LabelSet { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok().map(|i| i as u32)
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A feature matrix with aligned labels and stable row ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: SparseMatrix,
    pub y: Vec<u32>,
    pub labels: LabelSet,
    pub row_ids: Vec<u64>,
}

impl Dataset {
    pub fn new(
        x: SparseMatrix,
        y: Vec<u32>,
        labels: LabelSet,
        row_ids: Vec<u64>,
    ) -> Result<Dataset, LearnError> {
        if y.len() != x.n_rows() || row_ids.len() != x.n_rows() {
            return Err(LearnError::InvalidDataset(format!(
                "{} rows, {} labels, {} row ids",
                x.n_rows(),
                y.len(),
                row_ids.len()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&id| id as usize >= labels.len()) {
            return Err(LearnError::InvalidDataset(format!(
                "label id {bad} outside label set of {}",
                labels.len()
            )));
        }
        Ok(Dataset { x, y, labels, row_ids })
    }

    pub fn n_rows(&self) -> usize {
        self.x.n_rows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Baseline,
    Tree,
    Forest,
    Knn,
    Logistic,
    Ridge,
    Adaboost,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 7] = [
        ModelFamily::Baseline,
        ModelFamily::Tree,
        ModelFamily::Forest,
        ModelFamily::Knn,
        ModelFamily::Logistic,
        ModelFamily::Ridge,
        ModelFamily::Adaboost,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelFamily::Baseline => "baseline",
            ModelFamily::Tree => "tree",
            ModelFamily::Forest => "forest",
            ModelFamily::Knn => "knn",
            ModelFamily::Logistic => "logistic",
            ModelFamily::Ridge => "ridge",
            ModelFamily::Adaboost => "adaboost",
        }
    }

    /// Distance/margin learners train on z-scored continuous features.
    pub fn wants_standardized(self) -> bool {
        matches!(
            self,
            ModelFamily::Knn | ModelFamily::Logistic | ModelFamily::Ridge
        )
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| format!("unknown model family {s:?}"))
    }
}

/// Hyperparameters for every family; each family reads the knobs it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    /// Forest: number of trees.
    pub trees: usize,
    /// Forest: features considered per split; default is ceil(sqrt(d)).
    pub feature_subsample: Option<usize>,
    /// Forest: bootstrap row sampling.
    pub bootstrap: bool,
    /// KNN: neighbor count (clipped to the training size).
    pub knn_k: usize,
    /// Tree/forest: minimum node size to attempt a split.
    pub min_samples_split: usize,
    /// Tree/forest: optional depth cap.
    pub max_depth: Option<usize>,
    /// Logistic/ridge: L2 regularization strength.
    pub lambda: f64,
    /// Logistic: gradient-descent iterations.
    pub iterations: usize,
    /// Logistic: initial step size, decayed by 1/sqrt(t).
    pub step: f64,
    /// AdaBoost: boosting rounds.
    pub rounds: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            trees: 100,
            feature_subsample: None,
            bootstrap: true,
            knn_k: 5,
            min_samples_split: 2,
            max_depth: None,
            lambda: 1.0,
            iterations: 500,
            step: 0.1,
            rounds: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    #[serde(default)]
    pub hyper: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, seed: u64) -> ModelSpec {
        ModelSpec {
            family,
            hyper: Hyperparameters::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub(crate) enum ModelParams {
    Baseline { label: u32 },
    Tree(TreeModel),
    Forest(ForestModel),
    Knn(KnnModel),
    Linear(LinearModel),
    Adaboost(AdaboostModel),
}

/// A fitted model: spec, training label set, and family parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub labels: LabelSet,
    pub n_features: usize,
    pub(crate) params: ModelParams,
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelContainer {
    format_version: u32,
    model: Model,
}

impl Model {
    /// Writes the model as a versioned JSON container; round-trip exact.
    pub fn save(&self, mut writer: impl Write) -> Result<(), LearnError> {
        let container = ModelContainer {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer(&mut writer, &container)
            .map_err(|e| LearnError::BadContainer(e.to_string()))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(reader: impl BufRead) -> Result<Model, LearnError> {
        let container: ModelContainer =
            serde_json::from_reader(reader).map_err(|e| LearnError::BadContainer(e.to_string()))?;
        if container.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnError::BadContainer(format!(
                "unsupported format version {}",
                container.format_version
            )));
        }
        Ok(container.model)
    }
}

/// Deterministic seed derivation for sub-components (e.g. per-tree RNGs).
pub(crate) fn derive_seed(base: u64, salt: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in salt.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = base ^ h ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub(crate) fn majority_label(y: &[u32], n_classes: usize) -> u32 {
    let mut counts = vec![0usize; n_classes];
    for &label in y {
        counts[label as usize] += 1;
    }
    argmax_tie_smallest(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>())
}

/// Index of the maximum value; ties resolve to the smallest index.
pub(crate) fn argmax_tie_smallest(scores: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best as u32
}

/// Trains one model on one fold of data. Single-class datasets are not an
/// error: every family degrades to a constant predictor.
pub fn train(spec: &ModelSpec, data: &Dataset) -> Result<Model, LearnError> {
    if data.n_rows() == 0 {
        return Err(LearnError::EmptyDataset);
    }
    let n_classes = data.labels.len();
    let params = match spec.family {
        ModelFamily::Baseline => ModelParams::Baseline {
            label: majority_label(&data.y, n_classes),
        },
        ModelFamily::Tree => ModelParams::Tree(tree::fit(
            &data.x,
            &data.y,
            n_classes,
            &tree::TreeParams {
                min_samples_split: spec.hyper.min_samples_split,
                max_depth: spec.hyper.max_depth,
            },
            None,
        )),
        ModelFamily::Forest => ModelParams::Forest(forest::fit(spec, data)),
        ModelFamily::Knn => ModelParams::Knn(knn::fit(spec, data)),
        ModelFamily::Logistic => ModelParams::Linear(linear::fit_logistic(spec, data)),
        ModelFamily::Ridge => ModelParams::Linear(linear::fit_ridge(spec, data)),
        ModelFamily::Adaboost => ModelParams::Adaboost(adaboost::fit(spec, data)),
    };
    Ok(Model {
        spec: spec.clone(),
        labels: data.labels.clone(),
        n_features: data.x.n_cols(),
        params,
    })
}

/// Predicts one label id per row; deterministic.
pub fn predict(model: &Model, x: &SparseMatrix) -> Result<Vec<u32>, LearnError> {
    if x.n_cols() != model.n_features {
        return Err(LearnError::ShapeMismatch {
            expected: model.n_features,
            got: x.n_cols(),
        });
    }
    let n_classes = model.labels.len();
    let out = match &model.params {
        ModelParams::Baseline { label } => vec![*label; x.n_rows()],
        ModelParams::Tree(tree) => (0..x.n_rows()).map(|i| tree.predict_row(x, i)).collect(),
        ModelParams::Forest(forest) => forest.predict(x, n_classes),
        ModelParams::Knn(knn) => knn.predict(x, n_classes),
        ModelParams::Linear(linear) => linear.predict(x),
        ModelParams::Adaboost(ada) => ada.predict(x, n_classes),
    };
    Ok(out)
}
