//! Dense document vectors: mean-pooled word embeddings, externally computed
//! sentence embeddings, and surrogate-language resolution for languages that
//! have no embeddings of their own.

mod fallback;
mod llm;
mod precomputed;
mod vectors;

use std::path::PathBuf;

pub use fallback::{parse_reply, FallbackPolicy, LanguageResolver, Provenance, Resolution};
pub use llm::{
    render_prompt, ChatTransport, HttpChatTransport, LlmBackendConfig, API_KEY_ENV, DEFAULT_PROMPT_TEMPLATE,
    ENDPOINT_ENV,
};
pub use precomputed::load_precomputed_embeddings;
pub use vectors::{embed_documents, load_word_vectors, load_word_vectors_filtered, EmbeddingTable, OovReport};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: line {line}: expected {expected} values, found {actual}")]
    Dimension { path: PathBuf, line: usize, expected: usize, actual: usize },
    #[error("{path}: line {line}: invalid value {value:?}")]
    BadValue { path: PathBuf, line: usize, value: String },
    #[error("{path}: vector dimension must be positive")]
    ZeroDimension { path: PathBuf },
    #[error("{path}: no vectors found")]
    NoVectors { path: PathBuf },
    #[error("{path}: id `{id}` appears more than once")]
    DuplicateId { path: PathBuf, id: String },
    #[error("{path}: no vectors for ids {missing:?}")]
    Alignment { path: PathBuf, missing: Vec<String> },
}

#[derive(Debug, thiserror::Error)]
pub enum FallbackError {
    #[error("language fallback configuration: {0}")]
    Config(String),
    #[error("language `{0}` is unsupported and no model backend is configured")]
    Unresolved(String),
    #[error("model reply for `{language}` names no supported language: {reply:?}")]
    NoLanguageInReply { language: String, reply: String },
    #[error("model backend: {0}")]
    Transport(String),
    #[error("language cache: {0}")]
    Cache(String),
}
