//! Bag-of-words counts and smoothed TF-IDF weighting.
//!
//! The inverse document frequency is `ln((1 + N) / (1 + DF(w))) + 1`, where `N`
//! is the number of fitted documents and `DF(w)` the number of documents that
//! contain `w`. Term frequency is the raw count and rows are L2-normalized by
//! default.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::matrix::SparseMatrix;
use crate::tokenize::TokenSequence;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("every document is empty; vocabulary would be empty")]
    EmptyVocabulary,
    #[error("writing vocabulary: {0}")]
    Io(#[from] std::io::Error),
}

/// Token-to-column map with per-token document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    document_frequency: Vec<usize>,
    corpus_size: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, col: usize) -> &str {
        &self.tokens[col]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn document_frequency(&self, token: &str) -> Option<usize> {
        self.index_of(token).map(|c| self.document_frequency[c])
    }

    pub fn document_frequencies(&self) -> &[usize] {
        &self.document_frequency
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    /// Two-column `token<TAB>DF` listing in column order.
    pub fn write_tsv(&self, path: &Path) -> Result<(), FeatureError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (tok, df) in self.tokens.iter().zip(&self.document_frequency) {
            writeln!(w, "{tok}\t{df}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds a vocabulary over every token in the corpus, columns in sorted token order.
pub fn fit_bow(corpus: &[TokenSequence]) -> Result<Vocabulary, FeatureError> {
    if corpus.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let unique: BTreeSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for tok in unique {
            *df.entry(tok).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(FeatureError::EmptyVocabulary);
    }
    let tokens: Vec<String> = df.keys().map(|t| t.to_string()).collect();
    let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(Vocabulary { index, tokens, document_frequency: df.into_values().collect(), corpus_size: corpus.len() })
}

fn count_row(doc: &TokenSequence, vocab: &Vocabulary) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for tok in &doc.tokens {
        if let Some(c) = vocab.index_of(tok) {
            *counts.entry(c).or_default() += 1.0;
        }
    }
    counts.into_iter().collect()
}

/// Raw token counts; out-of-vocabulary tokens are skipped.
pub fn transform_bow(docs: &[TokenSequence], vocab: &Vocabulary) -> SparseMatrix {
    let rows = docs.iter().map(|d| count_row(d, vocab)).collect();
    SparseMatrix::new(vocab.len(), rows).expect("columns come from the vocabulary")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: Vocabulary,
    pub idf: Vec<f64>,
    pub row_normalize: bool,
}

pub fn smoothed_idf(corpus_size: usize, document_frequency: usize) -> f64 {
    ((1.0 + corpus_size as f64) / (1.0 + document_frequency as f64)).ln() + 1.0
}

pub fn fit_tfidf(corpus: &[TokenSequence]) -> Result<TfidfModel, FeatureError> {
    let vocabulary = fit_bow(corpus)?;
    let n = vocabulary.corpus_size();
    let idf = vocabulary.document_frequency.iter().map(|&df| smoothed_idf(n, df)).collect();
    Ok(TfidfModel { vocabulary, idf, row_normalize: true })
}

impl TfidfModel {
    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.vocabulary.index_of(token).map(|c| self.idf[c])
    }
}

pub fn transform_tfidf(docs: &[TokenSequence], model: &TfidfModel) -> SparseMatrix {
    let rows = docs
        .iter()
        .map(|d| {
            let mut row = count_row(d, &model.vocabulary);
            for (c, v) in row.iter_mut() {
                *v *= model.idf[*c];
            }
            if model.row_normalize {
                l2_normalize(&mut row);
            }
            row
        })
        .collect();
    SparseMatrix::new(model.vocabulary.len(), rows).expect("columns come from the vocabulary")
}

/// Scales a sparse row to unit L2 norm; zero rows stay untouched.
pub(crate) fn l2_normalize(row: &mut [(usize, f64)]) {
    let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        row.iter_mut().for_each(|(_, v)| *v /= norm);
    }
}
