use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, DecisionTree, FeatureSampler, TreeParams};
use super::LearnError;
use crate::labels::LabelMatrix;
use crate::matrix::{DenseMatrix, FeatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    All,
    #[serde(untagged)]
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(&self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(k) => *k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 100, max_features: MaxFeatures::Sqrt, bootstrap: true, max_depth: None, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_labels: usize,
}

impl RandomForest {
    pub fn fit(params: &ForestParams, x: &FeatureMatrix, y: &LabelMatrix, seed: u64) -> Result<Self, LearnError> {
        if params.n_trees == 0 {
            return Err(LearnError::InvalidParam("n_trees must be positive".into()));
        }
        if params.max_features == MaxFeatures::Count(0) {
            return Err(LearnError::InvalidParam("max_features must be positive".into()));
        }
        let tree_params = TreeParams { max_depth: params.max_depth, min_samples_split: params.min_samples_split };
        tree_params.validate()?;
        let n = x.n_rows();
        let max_features = params.max_features.resolve(x.n_cols());
        let columns = x.nonzero_columns();
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(params.n_trees);
        for _ in 0..params.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
            let mut weights = vec![0u32; n];
            if params.bootstrap {
                for _ in 0..n {
                    weights[rng.gen_range(0..n)] += 1;
                }
            } else {
                weights.fill(1);
            }
            let sampler = FeatureSampler { max_features, rng: &mut rng };
            trees.push(grow(&tree_params, x, &columns, y, &weights, Some(sampler)));
        }
        Ok(Self { trees, n_labels: y.n_labels() })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Leaf fractions averaged over trees.
    pub fn predict_scores(&self, x: &FeatureMatrix) -> DenseMatrix {
        let mut data = vec![0.0; x.n_rows() * self.n_labels];
        for (i, out) in data.chunks_mut(self.n_labels.max(1)).enumerate().take(x.n_rows()) {
            let row = x.row(i);
            for t in &self.trees {
                for (o, p) in out.iter_mut().zip(t.leaf_for(row)) {
                    *o += p;
                }
            }
        }
        let k = self.trees.len() as f64;
        data.iter_mut().for_each(|v| *v /= k);
        DenseMatrix::new(x.n_rows(), self.n_labels, data).expect("averages are finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (FeatureMatrix, LabelMatrix) {
        let rows: Vec<[f64; 3]> = (0..40).map(|i| [i as f64, (i % 7) as f64, ((i * 13) % 5) as f64]).collect();
        let ys: Vec<[u8; 2]> = (0..40).map(|i| [(i >= 20) as u8, (i % 2) as u8]).collect();
        (DenseMatrix::from_rows(&rows).unwrap().into(), LabelMatrix::from_rows(&ys).unwrap())
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (x, y) = toy();
        let p = ForestParams { n_trees: 10, ..Default::default() };
        let a = RandomForest::fit(&p, &x, &y, 3).unwrap();
        let b = RandomForest::fit(&p, &x, &y, 3).unwrap();
        let c = RandomForest::fit(&p, &x, &y, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn learns_an_easy_label() {
        let (x, y) = toy();
        let f = RandomForest::fit(&ForestParams { n_trees: 25, ..Default::default() }, &x, &y, 1).unwrap();
        let s = f.predict_scores(&x);
        let correct = (0..40).filter(|&i| (s.get(i, 0) > 0.5) as u8 == y.get(i, 0)).count();
        assert!(correct >= 38, "{correct}");
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(10), 3);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
        assert_eq!(MaxFeatures::Count(50).resolve(7), 7);
        let m: MaxFeatures = serde_json::from_str("4").unwrap();
        assert_eq!(m, MaxFeatures::Count(4));
        let m: MaxFeatures = serde_json::from_str("\"sqrt\"").unwrap();
        assert_eq!(m, MaxFeatures::Sqrt);
    }

    #[test]
    fn rejects_zero_trees() {
        let (x, y) = toy();
        assert!(RandomForest::fit(&ForestParams { n_trees: 0, ..Default::default() }, &x, &y, 0).is_err());
    }
}
