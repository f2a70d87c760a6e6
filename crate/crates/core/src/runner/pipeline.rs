use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{load_split_as, DatasetSplit, SplitRole};
use crate::dense_features::{embed_documents, load_precomputed_embeddings, load_word_vectors_filtered, EmbeddingTable};
use crate::labels::{LabelMatrix, EMOTIONS};
use crate::learn::FittedClassifier;
use crate::matrix::FeatureMatrix;
use crate::persist;
use crate::reduce::{normalize_rows, transform_pca, PcaModel, ReduceError};
use crate::sparse_features::{transform_bow, transform_tfidf, TfidfModel, Vocabulary};
use crate::tokenize::{TokenSequence, Tokenizer, TokenizerSpec};

use super::RunError;

pub const PIPELINE_KIND: &str = "pipeline";

/// The representation stage of a trained pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedRepresentation {
    Bow(Vocabulary),
    Tfidf(TfidfModel),
    /// Vectors are re-read from `path` and restricted to the tokens at hand.
    WordVectors {
        path: PathBuf,
    },
    /// Document vectors must be supplied alongside the input.
    Precomputed,
}

impl FittedRepresentation {
    pub(crate) fn needs_tokens(&self) -> bool {
        !matches!(self, FittedRepresentation::Precomputed)
    }

    /// Transforms several splits at once so word vectors are read only once.
    pub(crate) fn transform_many(
        &self,
        splits: &[&[TokenSequence]],
        precomputed: &[(&Path, Vec<&str>)],
    ) -> Result<Vec<FeatureMatrix>, RunError> {
        Ok(match self {
            FittedRepresentation::Bow(v) => splits.iter().map(|d| transform_bow(d, v).into()).collect(),
            FittedRepresentation::Tfidf(m) => splits.iter().map(|d| transform_tfidf(d, m).into()).collect(),
            FittedRepresentation::WordVectors { path } => {
                let keep: HashSet<String> =
                    splits.iter().flat_map(|d| d.iter()).flat_map(|s| s.tokens.iter().cloned()).collect();
                let table = load_word_vectors_filtered(path, Some(&keep))?;
                splits.iter().map(|d| embed(d, &table)).collect()
            }
            FittedRepresentation::Precomputed => precomputed
                .iter()
                .map(|(path, ids)| load_precomputed_embeddings(path, ids).map(FeatureMatrix::from))
                .collect::<Result<_, _>>()?,
        })
    }
}

fn embed(docs: &[TokenSequence], table: &EmbeddingTable) -> FeatureMatrix {
    let (m, oov) = embed_documents(docs, table);
    log::debug!(
        "{}: {}/{} tokens out of vocabulary, {} documents fully OOV",
        table.source.display(),
        oov.oov_tokens,
        oov.tokens,
        oov.fully_oov_documents
    );
    m.into()
}

/// Unit-norm scaling (when enabled) followed by a fitted PCA projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedReduction {
    pub normalize: bool,
    pub pca: PcaModel,
}

impl FittedReduction {
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix, ReduceError> {
        let z =
            if self.normalize { transform_pca(&normalize_rows(x), &self.pca)? } else { transform_pca(x, &self.pca)? };
        Ok(z.into())
    }
}

/// Everything needed to label new documents of one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub language: String,
    pub tokenizer: TokenizerSpec,
    pub representation: FittedRepresentation,
    pub reduction: Option<FittedReduction>,
    pub classifier: FittedClassifier,
}

impl PipelineModel {
    pub fn save(&self, path: &Path) -> Result<(), RunError> {
        Ok(persist::save(path, PIPELINE_KIND, self)?)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        Ok(persist::load(path, PIPELINE_KIND)?)
    }

    /// Predicted label bits for every document of `split`. Precomputed
    /// representations read their vectors from `embeddings`.
    pub fn predict_split(&self, split: &DatasetSplit, embeddings: Option<&Path>) -> Result<LabelMatrix, RunError> {
        let ids = split.ids();
        let x = if self.representation.needs_tokens() {
            let tokenizer = Tokenizer::new(self.tokenizer.clone())?;
            let docs = tokenizer.tokenize_all(split.documents.iter().map(|d| (d.id.as_str(), d.text.as_str())));
            self.representation.transform_many(&[&docs], &[])?.remove(0)
        } else {
            let path = embeddings.ok_or_else(|| {
                RunError::Config("this model uses precomputed embeddings; pass the embeddings file".into())
            })?;
            self.representation.transform_many(&[], &[(path, ids)])?.remove(0)
        };
        let x = match &self.reduction {
            Some(r) => r.apply(&x)?,
            None => x,
        };
        Ok(self.classifier.predict(&x)?.labels)
    }
}

/// Labels an `id,text` CSV with a saved pipeline and writes one binary
/// column per emotion. Returns the number of rows written.
pub fn predict_file(model: &Path, input: &Path, output: &Path, embeddings: Option<&Path>) -> Result<usize, RunError> {
    let model = PipelineModel::load(model)?;
    let split = load_split_as(input, &model.language, SplitRole::Test)?;
    let labels = model.predict_split(&split, embeddings)?;
    write_predictions(output, &split.ids(), &labels)?;
    Ok(labels.n_rows())
}

pub fn write_predictions(path: &Path, ids: &[&str], labels: &LabelMatrix) -> Result<(), RunError> {
    let csv_err = |e: csv::Error| RunError::Csv { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["id"];
    header.extend(EMOTIONS);
    w.write_record(&header).map_err(csv_err)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.to_string()];
        rec.extend(labels.row(i).iter().map(|b| b.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Reads a file written by [`write_predictions`].
pub fn read_predictions(path: &Path) -> Result<(Vec<String>, LabelMatrix), RunError> {
    let csv_err = |e: csv::Error| RunError::Csv { path: path.to_path_buf(), message: e.to_string() };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("id") || header[1..] != EMOTIONS {
        return Err(RunError::Csv { path: path.to_path_buf(), message: format!("unexpected header {header:?}") });
    }
    let (mut ids, mut bits) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        ids.push(rec[0].to_string());
        for cell in rec.iter().skip(1) {
            bits.push(match cell {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(RunError::Csv {
                        path: path.to_path_buf(),
                        message: format!("non-binary cell {other:?}"),
                    })
                }
            });
        }
    }
    let labels = LabelMatrix::new(ids.len(), EMOTIONS.len(), bits)
        .map_err(|e| RunError::Csv { path: path.to_path_buf(), message: e.to_string() })?;
    Ok((ids, labels))
}
