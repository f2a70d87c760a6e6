//! Shared fixtures for the benchmarks: a synthetic corpus tokenized and
//! turned into the feature matrices each stage consumes.

use emotion_core::sparse_features::{fit_tfidf, transform_tfidf};
use emotion_core::synthetic::{SyntheticCorpus, SyntheticSpec};
use emotion_core::{
    fit_pca, transform_pca, FeatureMatrix, LabelMatrix, ReductionConfig, TokenSequence, Tokenizer, TokenizerSpec,
};

pub struct Fixture {
    pub train_tokens: Vec<TokenSequence>,
    pub test_tokens: Vec<TokenSequence>,
    pub train_tfidf: FeatureMatrix,
    pub train_reduced: FeatureMatrix,
    pub test_reduced: FeatureMatrix,
    pub train_labels: LabelMatrix,
}

/// Builds the fixture from a corpus of `n_train` training documents.
pub fn fixture(n_train: usize) -> Fixture {
    let spec = SyntheticSpec { n_train, n_dev: 0, n_test: n_train / 4, ..SyntheticSpec::default() };
    let corpus = SyntheticCorpus::generate(&spec);
    let tokenizer = Tokenizer::new(TokenizerSpec::default()).expect("default tokenizer");
    let tokens = |split: &emotion_core::DatasetSplit| {
        tokenizer.tokenize_all(split.documents.iter().map(|d| (d.id.as_str(), d.text.as_str())))
    };
    let train_tokens = tokens(&corpus.train);
    let test_tokens = tokens(&corpus.test);
    let model = fit_tfidf(&train_tokens).expect("nonempty corpus");
    let train_tfidf: FeatureMatrix = transform_tfidf(&train_tokens, &model).into();
    let test_tfidf: FeatureMatrix = transform_tfidf(&test_tokens, &model).into();
    let pca = fit_pca(&train_tfidf, &ReductionConfig::default()).expect("pca fits");
    let train_reduced = transform_pca(&train_tfidf, &pca).expect("shapes match").into();
    let test_reduced = transform_pca(&test_tfidf, &pca).expect("shapes match").into();
    Fixture {
        train_tokens,
        test_tokens,
        train_tfidf,
        train_reduced,
        test_reduced,
        train_labels: corpus.train.label_matrix().expect("labeled"),
    }
}
