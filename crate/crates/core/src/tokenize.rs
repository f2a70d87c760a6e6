//! Pluggable tokenizers.
//!
//! Three kinds are provided: Unicode word segmentation (the default),
//! plain whitespace splitting, and greedy longest-match segmentation against
//! a user-supplied subword vocabulary.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

#[derive(Debug, thiserror::Error)]
pub enum TokenizeError {
    #[error("external-vocab tokenizer requires a vocabulary file")]
    MissingVocab,
    #[error("{kind:?} tokenizer does not take a vocabulary file")]
    UnexpectedVocab { kind: TokenizerKind },
    #[error("cannot read vocabulary {path}: {source}")]
    VocabRead { path: PathBuf, source: std::io::Error },
    #[error("vocabulary {path} is empty")]
    EmptyVocab { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerKind {
    UnicodeWords,
    Whitespace,
    ExternalVocab,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenizerSpec {
    pub kind: TokenizerKind,
    #[serde(default = "default_lowercase")]
    pub lowercase: bool,
    #[serde(default)]
    pub vocab_path: Option<PathBuf>,
}

fn default_lowercase() -> bool {
    true
}

impl Default for TokenizerSpec {
    fn default() -> Self {
        Self { kind: TokenizerKind::UnicodeWords, lowercase: true, vocab_path: None }
    }
}

impl TokenizerSpec {
    pub fn whitespace(lowercase: bool) -> Self {
        Self { kind: TokenizerKind::Whitespace, lowercase, vocab_path: None }
    }

    pub fn validate(&self) -> Result<(), TokenizeError> {
        match (self.kind, &self.vocab_path) {
            (TokenizerKind::ExternalVocab, None) => Err(TokenizeError::MissingVocab),
            (TokenizerKind::ExternalVocab, Some(_)) => Ok(()),
            (kind, Some(_)) => Err(TokenizeError::UnexpectedVocab { kind }),
            (_, None) => Ok(()),
        }
    }
}

/// Tokens of one document, in surface order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    pub source_id: String,
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(source_id: impl Into<String>, tokens: Vec<String>) -> Self {
        Self { source_id: source_id.into(), tokens }
    }

    /// Convenience for tests and fixtures: whitespace-split an already tokenized string.
    pub fn from_words(source_id: impl Into<String>, words: &str) -> Self {
        Self::new(source_id, words.split_whitespace().map(str::to_string).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A constructed, immutable tokenizer.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    spec: TokenizerSpec,
    vocab: Option<SubwordVocab>,
}

#[derive(Debug, Clone)]
struct SubwordVocab {
    pieces: HashSet<String>,
    max_chars: usize,
}

impl Tokenizer {
    pub fn new(spec: TokenizerSpec) -> Result<Self, TokenizeError> {
        spec.validate()?;
        let vocab = match &spec.vocab_path {
            Some(path) => Some(load_vocab(path)?),
            None => None,
        };
        Ok(Self { spec, vocab })
    }

    pub fn spec(&self) -> &TokenizerSpec {
        &self.spec
    }

    pub fn tokenize(&self, source_id: &str, text: &str) -> TokenSequence {
        let owned;
        let text = if self.spec.lowercase {
            owned = text.to_lowercase();
            owned.as_str()
        } else {
            text
        };
        let tokens = match self.spec.kind {
            TokenizerKind::Whitespace => text.split_whitespace().map(str::to_string).collect(),
            TokenizerKind::UnicodeWords => words(text).map(str::to_string).collect(),
            TokenizerKind::ExternalVocab => {
                let vocab = self.vocab.as_ref().expect("validated at construction");
                let mut out = Vec::new();
                for word in words(text) {
                    vocab.segment(word, &mut out);
                }
                out
            }
        };
        TokenSequence::new(source_id, tokens)
    }

    pub fn tokenize_all<'a>(&self, docs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Vec<TokenSequence> {
        docs.into_iter().map(|(id, text)| self.tokenize(id, text)).collect()
    }
}

/// Unicode word segments, split again on whitespace: a combining mark after a
/// space joins the space into the segment.
fn words(text: &str) -> impl Iterator<Item = &str> {
    text.unicode_words().flat_map(str::split_whitespace)
}

/// Tokenizes a single string with a freshly built tokenizer.
pub fn tokenize(text: &str, spec: &TokenizerSpec) -> Result<TokenSequence, TokenizeError> {
    Ok(Tokenizer::new(spec.clone())?.tokenize("", text))
}

fn load_vocab(path: &Path) -> Result<SubwordVocab, TokenizeError> {
    let body = std::fs::read_to_string(path)
        .map_err(|source| TokenizeError::VocabRead { path: path.to_path_buf(), source })?;
    let pieces: HashSet<String> = body.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect();
    if pieces.is_empty() {
        return Err(TokenizeError::EmptyVocab { path: path.to_path_buf() });
    }
    let max_chars = pieces.iter().map(|p| p.chars().count()).max().unwrap_or(1);
    Ok(SubwordVocab { pieces, max_chars })
}

impl SubwordVocab {
    /// Greedy longest match from the left; a character with no matching piece
    /// becomes its own token.
    fn segment(&self, word: &str, out: &mut Vec<String>) {
        let bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).chain([word.len()]).collect();
        let n_chars = bounds.len() - 1;
        let mut start = 0;
        while start < n_chars {
            let longest = (start + 1..=n_chars.min(start + self.max_chars))
                .rev()
                .find(|&end| self.pieces.contains(&word[bounds[start]..bounds[end]]))
                .unwrap_or(start + 1);
            out.push(word[bounds[start]..bounds[longest]].to_string());
            start = longest;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str, spec: &TokenizerSpec) -> Vec<String> {
        tokenize(text, spec).unwrap().tokens
    }

    #[test]
    fn unicode_words_lowercase() {
        assert_eq!(toks("The cat sat.", &TokenizerSpec::default()), ["the", "cat", "sat"]);
    }

    #[test]
    fn whitespace_kind() {
        assert_eq!(toks("a  b\tc", &TokenizerSpec::whitespace(false)), ["a", "b", "c"]);
    }

    #[test]
    fn devanagari_words() {
        let t = toks("नमस्ते दुनिया", &TokenizerSpec::default());
        assert_eq!(t, ["नमस्ते", "दुनिया"]);
    }

    #[test]
    fn punctuation_only_is_empty() {
        assert!(toks("?!... --", &TokenizerSpec::default()).is_empty());
    }

    #[test]
    fn vocab_file_rules() {
        let spec = TokenizerSpec { kind: TokenizerKind::ExternalVocab, lowercase: true, vocab_path: None };
        assert!(matches!(Tokenizer::new(spec), Err(TokenizeError::MissingVocab)));
        let spec = TokenizerSpec { kind: TokenizerKind::Whitespace, lowercase: true, vocab_path: Some("v.txt".into()) };
        assert!(matches!(Tokenizer::new(spec), Err(TokenizeError::UnexpectedVocab { .. })));
        let spec = TokenizerSpec {
            kind: TokenizerKind::ExternalVocab,
            lowercase: true,
            vocab_path: Some("/nonexistent/vocab.txt".into()),
        };
        assert!(matches!(Tokenizer::new(spec), Err(TokenizeError::VocabRead { .. })));
    }

    #[test]
    fn greedy_longest_match() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        std::fs::write(&path, "un\nhapp\nhappi\nness\ny\n").unwrap();
        let spec = TokenizerSpec { kind: TokenizerKind::ExternalVocab, lowercase: true, vocab_path: Some(path) };
        assert_eq!(toks("Unhappiness", &spec), ["un", "happi", "ness"]);
        assert_eq!(toks("happy zq", &spec), ["happ", "y", "z", "q"]);
    }

    proptest! {
        #[test]
        fn case_folding_is_idempotent(text in "\\PC{0,40}") {
            let spec = TokenizerSpec::default();
            prop_assert_eq!(toks(&text.to_lowercase(), &spec), toks(&text, &spec));
        }

        #[test]
        fn whitespace_concatenation(a in "[a-zA-Z0-9 ]{0,20}", b in "[a-zA-Z0-9 ]{0,20}") {
            let spec = TokenizerSpec::whitespace(false);
            let mut expect = toks(&a, &spec);
            expect.extend(toks(&b, &spec));
            prop_assert_eq!(toks(&format!("{a} {b}"), &spec), expect);
        }

        #[test]
        fn unicode_tokens_have_no_whitespace(text in "\\PC{0,40}") {
            for t in toks(&text, &TokenizerSpec::default()) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
            }
        }
    }
}
