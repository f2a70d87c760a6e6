//! Multi-label classifiers behind one fit/predict contract.
//!
//! Trees, forests and k-NN predict all label columns natively (joint Gini
//! impurity, per-label neighbour votes). The linear SVM and the MLP use one
//! independent output per label. Every kind that produces scores thresholds
//! them at 0.5 to get the binary prediction.

mod forest;
mod grid;
mod knn;
mod mlp;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};

use crate::evaluate::EvalError;
use crate::labels::LabelMatrix;
use crate::matrix::{DenseMatrix, FeatureMatrix};

pub use forest::{ForestParams, MaxFeatures, RandomForest};
pub use grid::{grid_search, grid_search_mlp, grid_search_with, GridResult, HyperGrid};
pub use knn::{Knn, KnnParams};
pub use mlp::{gradient_check, gradient_check_network, Mlp, MlpParams};
pub use svm::{LinearSvm, SvmParams};
pub use tree::{DecisionTree, TreeParams};

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("feature matrix has {x_rows} rows but label matrix has {y_rows}")]
    RowMismatch { x_rows: usize, y_rows: usize },
    #[error("model expects {expected} input columns, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("grid point invalid: {0}")]
    Grid(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Hyperparameters, tagged by `kind` in serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Dt(TreeParams),
    Knn(KnnParams),
    Rf(ForestParams),
    Svm(SvmParams),
    Voting(VotingParams),
    Mlp(MlpParams),
}

impl ModelParams {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelParams::Dt(_) => "dt",
            ModelParams::Knn(_) => "knn",
            ModelParams::Rf(_) => "rf",
            ModelParams::Svm(_) => "svm",
            ModelParams::Voting(_) => "voting",
            ModelParams::Mlp(_) => "mlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingParams {
    #[serde(default = "default_members")]
    pub members: Vec<ClassifierSpec>,
}

fn default_members() -> Vec<ClassifierSpec> {
    vec![
        ClassifierSpec::new(ModelParams::Knn(KnnParams::default())),
        ClassifierSpec::new(ModelParams::Dt(TreeParams::default())),
        ClassifierSpec::new(ModelParams::Rf(ForestParams::default())),
    ]
}

impl Default for VotingParams {
    fn default() -> Self {
        Self { members: default_members() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub params: ModelParams,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(params: ModelParams) -> Self {
        Self { params, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kind_name(&self) -> &'static str {
        self.params.kind_name()
    }

    pub fn dt() -> Self {
        Self::new(ModelParams::Dt(TreeParams::default()))
    }

    pub fn knn(k: usize) -> Self {
        Self::new(ModelParams::Knn(KnnParams { k }))
    }

    pub fn rf() -> Self {
        Self::new(ModelParams::Rf(ForestParams::default()))
    }

    pub fn svm() -> Self {
        Self::new(ModelParams::Svm(SvmParams::default()))
    }

    pub fn voting() -> Self {
        Self::new(ModelParams::Voting(VotingParams::default()))
    }

    pub fn mlp() -> Self {
        Self::new(ModelParams::Mlp(MlpParams::default()))
    }
}

/// Seed for the `index`-th sub-model of a model seeded with `seed`.
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedState {
    Tree(DecisionTree),
    Knn(Knn),
    Forest(RandomForest),
    Svm(LinearSvm),
    Voting(Vec<FittedClassifier>),
    Mlp(Mlp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedClassifier {
    #[serde(with = "spec_as_json")]
    pub spec: ClassifierSpec,
    pub input_dim: usize,
    pub n_labels: usize,
    pub state: FittedState,
}

/// Specs use flattened tagged enums, which non-self-describing formats such
/// as bincode cannot decode, so they travel as embedded JSON text.
mod spec_as_json {
    use serde::{de::Error as _, ser::Error as _, Deserialize, Deserializer, Serializer};

    use super::ClassifierSpec;

    pub fn serialize<S: Serializer>(spec: &ClassifierSpec, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&serde_json::to_string(spec).map_err(S::Error::custom)?)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ClassifierSpec, D::Error> {
        serde_json::from_str(&String::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// Binary predictions plus per-label scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    pub labels: LabelMatrix,
    pub scores: DenseMatrix,
}

impl PredictionMatrix {
    pub(crate) fn from_scores(scores: DenseMatrix) -> Self {
        let n_labels = scores.n_cols();
        let bits = scores.as_slice().iter().map(|&s| (s > 0.5) as u8).collect();
        let labels = LabelMatrix::new(scores.n_rows(), n_labels, bits).expect("bits are binary");
        Self { labels, scores }
    }
}

fn check_training(x: &FeatureMatrix, y: &LabelMatrix) -> Result<(), LearnError> {
    if x.n_rows() != y.n_rows() {
        return Err(LearnError::RowMismatch { x_rows: x.n_rows(), y_rows: y.n_rows() });
    }
    if x.n_rows() == 0 {
        return Err(LearnError::EmptyTrainingSet);
    }
    Ok(())
}

pub fn fit(spec: &ClassifierSpec, x: &FeatureMatrix, y: &LabelMatrix) -> Result<FittedClassifier, LearnError> {
    check_training(x, y)?;
    let state = match &spec.params {
        ModelParams::Dt(p) => FittedState::Tree(DecisionTree::fit(p, x, y)?),
        ModelParams::Knn(p) => FittedState::Knn(Knn::fit(p, x, y)?),
        ModelParams::Rf(p) => FittedState::Forest(RandomForest::fit(p, x, y, spec.seed)?),
        ModelParams::Svm(p) => FittedState::Svm(LinearSvm::fit(p, x, y, spec.seed)?),
        ModelParams::Mlp(p) => FittedState::Mlp(Mlp::fit(p, x, y, spec.seed)?),
        ModelParams::Voting(p) => {
            if p.members.is_empty() {
                return Err(LearnError::InvalidParam("voting needs at least one member".into()));
            }
            let members = p
                .members
                .iter()
                .enumerate()
                .map(|(i, m)| fit(&m.clone().with_seed(derive_seed(spec.seed, i as u64)), x, y))
                .collect::<Result<Vec<_>, _>>()?;
            FittedState::Voting(members)
        }
    };
    Ok(FittedClassifier { spec: spec.clone(), input_dim: x.n_cols(), n_labels: y.n_labels(), state })
}

impl FittedClassifier {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<PredictionMatrix, LearnError> {
        predict(self, x)
    }

    /// Fitted voting members, empty for other kinds.
    pub fn members(&self) -> &[FittedClassifier] {
        match &self.state {
            FittedState::Voting(m) => m,
            _ => &[],
        }
    }
}

pub fn predict(model: &FittedClassifier, x: &FeatureMatrix) -> Result<PredictionMatrix, LearnError> {
    if x.n_cols() != model.input_dim {
        return Err(LearnError::Dimension { expected: model.input_dim, actual: x.n_cols() });
    }
    let scores = match &model.state {
        FittedState::Tree(t) => t.predict_scores(x),
        FittedState::Knn(k) => k.predict_scores(x),
        FittedState::Forest(f) => f.predict_scores(x),
        FittedState::Svm(s) => s.predict_scores(x),
        FittedState::Mlp(m) => m.predict_scores(x),
        FittedState::Voting(members) => {
            let mut votes = DenseMatrix::zeros(x.n_rows(), model.n_labels);
            for m in members {
                let p = predict(m, x)?;
                for i in 0..x.n_rows() {
                    let row = votes.row_mut(i);
                    for (v, &b) in row.iter_mut().zip(p.labels.row(i)) {
                        *v += b as f64;
                    }
                }
            }
            let n = members.len() as f64;
            let data = votes.as_slice().iter().map(|v| v / n).collect();
            DenseMatrix::new(x.n_rows(), model.n_labels, data).expect("shape preserved")
        }
    };
    Ok(PredictionMatrix::from_scores(scores))
}
