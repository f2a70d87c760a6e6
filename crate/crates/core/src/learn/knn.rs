use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::labels::LabelMatrix;
use crate::matrix::{DenseMatrix, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Brute-force Euclidean k-nearest neighbours. Distance ties go to the
/// lower training row index; each label is predicted by neighbour majority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    x: FeatureMatrix,
    y: LabelMatrix,
}

impl Knn {
    pub fn fit(params: &KnnParams, x: &FeatureMatrix, y: &LabelMatrix) -> Result<Self, LearnError> {
        if params.k == 0 {
            return Err(LearnError::InvalidParam("k must be positive".into()));
        }
        if params.k > x.n_rows() {
            return Err(LearnError::InvalidParam(format!("k = {} exceeds the {} training rows", params.k, x.n_rows())));
        }
        Ok(Self { k: params.k, x: x.clone(), y: y.clone() })
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbours(&self, query: &[f64]) -> Vec<usize> {
        let q_norm: f64 = query.iter().map(|v| v * v).sum();
        let mut d: Vec<(f64, usize)> =
            (0..self.x.n_rows()).map(|i| (self.x.row(i).squared_distance(query, q_norm), i)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict_scores(&self, x: &FeatureMatrix) -> DenseMatrix {
        let n_labels = self.y.n_labels();
        let mut data = Vec::with_capacity(x.n_rows() * n_labels);
        for i in 0..x.n_rows() {
            let q = x.row(i).to_vec(x.n_cols());
            let mut votes = vec![0.0; n_labels];
            for j in self.neighbours(&q) {
                for (v, &b) in votes.iter_mut().zip(self.y.row(j)) {
                    *v += b as f64;
                }
            }
            data.extend(votes.iter().map(|v| v / self.k as f64));
        }
        DenseMatrix::new(x.n_rows(), n_labels, data).expect("vote fractions are finite")
    }
}
