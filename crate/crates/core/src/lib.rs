//! Multilingual multi-label emotion detection.
//!
//! Documents are turned into sparse count/TF-IDF vectors or dense embedding
//! averages, optionally unit-normalized and projected with PCA, and fed to one
//! of several multi-label classifiers. The runner sweeps the full experiment
//! matrix and writes comparison tables.

pub mod corpus;
pub mod dense_features;
pub mod evaluate;
pub mod labels;
pub mod learn;
pub mod matrix;
pub mod persist;
pub mod reduce;
pub mod runner;
pub mod sparse_features;
pub mod synthetic;
pub mod tokenize;

pub use corpus::{load_split, DatasetSplit, LabeledDocument, SplitRole};
pub use evaluate::{confusion_rates, f1_macro, ConfusionRates, EvalReport, TimingRecord};
pub use labels::{EmotionLabels, LabelMatrix, EMOTIONS, NUM_EMOTIONS};
pub use learn::{fit, predict, ClassifierSpec, FittedClassifier, HyperGrid, PredictionMatrix};
pub use matrix::{DenseMatrix, FeatureMatrix, SparseMatrix};
pub use reduce::{fit_pca, transform_pca, PcaModel, ReductionConfig};
pub use runner::{predict_file, run_ablation, run_matrix, ExperimentConfig, ReportTable};
pub use tokenize::{TokenSequence, Tokenizer, TokenizerSpec};
