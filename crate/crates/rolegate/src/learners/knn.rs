//! K-nearest-neighbors over sparse rows with Euclidean distance.
//!
//! Distance ties resolve to the lowest stored row id, which makes
//! predictions invariant under any permutation of the training rows.

use serde::{Deserialize, Serialize};

use super::{argmax_tie_smallest, Dataset, ModelSpec};
use crate::features::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct KnnModel {
    pub x: SparseMatrix,
    pub y: Vec<u32>,
    pub row_ids: Vec<u64>,
    pub k: usize,
}

pub(crate) fn fit(spec: &ModelSpec, data: &Dataset) -> KnnModel {
    KnnModel {
        x: data.x.clone(),
        y: data.y.clone(),
        row_ids: data.row_ids.clone(),
        k: spec.hyper.knn_k.max(1),
    }
}

impl KnnModel {
    pub(crate) fn predict(&self, x: &SparseMatrix, n_classes: usize) -> Vec<u32> {
        let k = self.k.min(self.x.n_rows());
        (0..x.n_rows())
            .map(|q| {
                let query = x.row(q);
                let mut neighbors: Vec<(f64, u64, u32)> = (0..self.x.n_rows())
                    .map(|i| {
                        (
                            SparseMatrix::row_sq_distance(query, self.x.row(i)),
                            self.row_ids[i],
                            self.y[i],
                        )
                    })
                    .collect();
                neighbors.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0)
                        .expect("finite distances")
                        .then(a.1.cmp(&b.1))
                });
                let mut votes = vec![0.0f64; n_classes];
                for &(_, _, label) in neighbors.iter().take(k) {
                    votes[label as usize] += 1.0;
                }
                argmax_tie_smallest(&votes)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tests::dense_dataset;
    use crate::learners::{predict, train, LabelSet, ModelFamily};

    #[test]
    fn k1_on_training_row_returns_own_label() {
        let data = dense_dataset(
            &[&[0.0, 0.0], &[5.0, 5.0], &[10.0, 0.0]],
            &[0, 1, 0],
            &["a", "b"],
        );
        let mut spec = ModelSpec::new(ModelFamily::Knn, 0);
        spec.hyper.knn_k = 1;
        let model = train(&spec, &data).unwrap();
        assert_eq!(predict(&model, &data.x).unwrap(), data.y);
    }

    #[test]
    fn k_is_clipped_to_training_size() {
        let data = dense_dataset(&[&[0.0], &[1.0]], &[0, 1], &["a", "b"]);
        let mut spec = ModelSpec::new(ModelFamily::Knn, 0);
        spec.hyper.knn_k = 50;
        let model = train(&spec, &data).unwrap();
        // All rows vote; tie of 1-1 resolves to label "a".
        assert_eq!(predict(&model, &data.x).unwrap(), vec![0, 0]);
    }

    #[test]
    fn prediction_invariant_under_training_permutation() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64, (i * i % 7) as f64])
            .collect();
        let y: Vec<u32> = (0..10).map(|i| (i % 3) as u32).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let data = dense_dataset(&refs, &y, &["a", "b", "c"]);

        // Reversed row order, same row ids attached.
        let mut x_rev = SparseMatrix::new(2);
        for i in (0..10).rev() {
            x_rev.push_row(data.x.row(i).to_vec());
        }
        let y_rev: Vec<u32> = data.y.iter().rev().copied().collect();
        let ids_rev: Vec<u64> = data.row_ids.iter().rev().copied().collect();
        let data_rev = Dataset::new(
            x_rev,
            y_rev,
            LabelSet::new(["a", "b", "c"]),
            ids_rev,
        )
        .unwrap();

        let spec = ModelSpec::new(ModelFamily::Knn, 0);
        let a = train(&spec, &data).unwrap();
        let b = train(&spec, &data_rev).unwrap();

        let mut queries = SparseMatrix::new(2);
        queries.push_row(vec![(0, 4.2), (1, 1.0)]);
        queries.push_row(vec![(0, 8.0)]);
        assert_eq!(
            predict(&a, &queries).unwrap(),
            predict(&b, &queries).unwrap()
        );
    }
}
