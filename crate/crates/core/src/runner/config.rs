use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dense_features::{FallbackPolicy, LanguageResolver, Provenance};
use crate::learn::{ClassifierSpec, HyperGrid};
use crate::reduce::ReductionConfig;
use crate::tokenize::TokenizerSpec;

use super::RunError;

pub const LANG_PLACEHOLDER: &str = "{lang}";
pub const SPLIT_PLACEHOLDER: &str = "{split}";

/// One document representation in the matrix. Path templates may contain
/// `{lang}` and, for precomputed vectors, `{split}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RepresentationSpec {
    Bow {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    Tfidf {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    WordVectors {
        path: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    Precomputed {
        path: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

impl RepresentationSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            RepresentationSpec::Bow { .. } => "bow",
            RepresentationSpec::Tfidf { .. } => "tfidf",
            RepresentationSpec::WordVectors { .. } => "word_vectors",
            RepresentationSpec::Precomputed { .. } => "precomputed",
        }
    }

    /// Column label in reports: the configured name, else the kind.
    pub fn label(&self) -> &str {
        match self {
            RepresentationSpec::Bow { name }
            | RepresentationSpec::Tfidf { name }
            | RepresentationSpec::WordVectors { name, .. }
            | RepresentationSpec::Precomputed { name, .. } => name.as_deref().unwrap_or(self.kind_name()),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, RepresentationSpec::WordVectors { .. } | RepresentationSpec::Precomputed { .. })
    }

    fn template_mut(&mut self) -> Option<&mut String> {
        match self {
            RepresentationSpec::WordVectors { path, .. } | RepresentationSpec::Precomputed { path, .. } => Some(path),
            _ => None,
        }
    }
}

/// A classifier plus an optional report label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: ClassifierSpec,
}

impl ClassifierEntry {
    pub fn new(spec: ClassifierSpec) -> Self {
        Self { label: None, spec }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.spec.kind_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    #[default]
    Test,
    Dev,
}

impl EvalSplit {
    pub fn file_stem(self) -> &'static str {
        match self {
            EvalSplit::Test => "test",
            EvalSplit::Dev => "dev",
        }
    }
}

/// Which cells feed the single-axis table views. Unset fields fall back to
/// `voting` (or the first classifier), the first representation, and PCA on
/// when it is part of the matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceCells {
    #[serde(default)]
    pub classifier: Option<String>,
    #[serde(default)]
    pub representation: Option<String>,
    #[serde(default)]
    pub pca: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Holds `<lang>/train.csv`, `<lang>/dev.csv` and `<lang>/test.csv`.
    pub data_dir: PathBuf,
    pub languages: Vec<String>,
    pub representations: Vec<RepresentationSpec>,
    #[serde(default)]
    pub tokenizer: TokenizerSpec,
    #[serde(default)]
    pub reduction: ReductionConfig,
    #[serde(default = "default_pca")]
    pub pca: Vec<bool>,
    pub classifiers: Vec<ClassifierEntry>,
    /// Searched on the dev split for every `mlp` classifier when present.
    #[serde(default)]
    pub mlp_grid: Option<HyperGrid>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<FallbackPolicy>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub resume: bool,
    #[serde(default)]
    pub save_models: bool,
    #[serde(default)]
    pub evaluate_on: EvalSplit,
    #[serde(default, skip_serializing_if = "ReferenceCells::is_unset")]
    pub reference: ReferenceCells,
}

fn default_pca() -> Vec<bool> {
    vec![false, true]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_workers() -> usize {
    1
}

impl ReferenceCells {
    pub fn is_unset(&self) -> bool {
        *self == Self::default()
    }
}

impl ExperimentConfig {
    /// Parses a JSON config and resolves relative paths against its directory.
    /// Does not validate.
    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            RunError::Config(message) => RunError::Config(format!("{}: {message}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let at = e.path().to_string();
            RunError::Config(if at == "." { e.inner().to_string() } else { format!("at `{at}`: {}", e.inner()) })
        })
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.data_dir);
        join(&mut self.out_dir);
        if let Some(v) = &mut self.tokenizer.vocab_path {
            join(v);
        }
        if let Some(c) = self.fallback.as_mut().and_then(|f| f.cache_path.as_mut()) {
            join(c);
        }
        for rep in &mut self.representations {
            if let Some(t) = rep.template_mut() {
                if Path::new(t.as_str()).is_relative() {
                    *t = base.join(t.as_str()).to_string_lossy().into_owned();
                }
            }
        }
    }

    pub fn split_path(&self, lang: &str, stem: &str) -> PathBuf {
        self.data_dir.join(lang).join(format!("{stem}.csv"))
    }

    pub fn uses_grid(&self) -> bool {
        self.mlp_grid.is_some() && self.classifiers.iter().any(|c| c.spec.kind_name() == "mlp")
    }

    pub fn n_cells(&self) -> usize {
        self.languages.len() * self.representations.len() * self.pca.len() * self.classifiers.len()
    }

    pub fn reference_classifier(&self) -> &str {
        match &self.reference.classifier {
            Some(c) => c,
            None => self
                .classifiers
                .iter()
                .find(|c| c.label() == "voting")
                .or(self.classifiers.first())
                .map_or("", ClassifierEntry::label),
        }
    }

    pub fn reference_representation(&self) -> &str {
        match &self.reference.representation {
            Some(r) => r,
            None => self.representations.first().map_or("", RepresentationSpec::label),
        }
    }

    pub fn reference_pca(&self) -> bool {
        self.reference.pca.unwrap_or_else(|| self.pca.contains(&true) || self.pca.is_empty())
    }

    /// Checks axis sizes, label uniqueness and that referenced files exist.
    pub fn validate(&self) -> Result<(), RunError> {
        let invalid = |m: String| Err(RunError::Config(m));
        for (axis, n) in [
            ("languages", self.languages.len()),
            ("representations", self.representations.len()),
            ("pca", self.pca.len()),
            ("classifiers", self.classifiers.len()),
        ] {
            if n == 0 {
                return invalid(format!("`{axis}` needs at least one value"));
            }
        }
        if self.workers == 0 {
            return invalid("`workers` must be at least 1".into());
        }
        unique("languages", self.languages.iter().map(String::as_str))?;
        unique("representations", self.representations.iter().map(RepresentationSpec::label))?;
        unique("classifiers", self.classifiers.iter().map(ClassifierEntry::label))?;
        if self.pca.len() == 2 && self.pca[0] == self.pca[1] {
            return invalid("`pca` lists the same value twice".into());
        }
        if self.pca.len() > 2 {
            return invalid("`pca` takes at most two values".into());
        }
        let ref_clf = self.reference_classifier();
        if !self.classifiers.iter().any(|c| c.label() == ref_clf) {
            return invalid(format!("reference classifier `{ref_clf}` is not in `classifiers`"));
        }
        let ref_rep = self.reference_representation();
        if !self.representations.iter().any(|r| r.label() == ref_rep) {
            return invalid(format!("reference representation `{ref_rep}` is not in `representations`"));
        }
        if !self.pca.contains(&self.reference_pca()) {
            return invalid("reference pca setting is not in `pca`".into());
        }
        self.tokenizer.validate().map_err(|e| RunError::Config(e.to_string()))?;
        if let Some(grid) = &self.mlp_grid {
            grid.points(&ClassifierSpec::mlp()).map_err(|e| RunError::Config(format!("`mlp_grid`: {e}")))?;
        }

        require(&self.data_dir, "data directory")?;
        if let Some(v) = &self.tokenizer.vocab_path {
            require(v, "tokenizer vocabulary")?;
        }
        let eval = self.evaluate_on.file_stem();
        let needs_dev = self.uses_grid() || self.evaluate_on == EvalSplit::Dev;
        for lang in &self.languages {
            require(&self.split_path(lang, "train"), "training split")?;
            require(&self.split_path(lang, eval), "evaluation split")?;
            if needs_dev {
                require(&self.split_path(lang, "dev"), "dev split")?;
            }
        }

        // Word-vector files are checked for every language whose surrogate is
        // known without asking the model backend.
        let resolver = match &self.fallback {
            Some(p) => {
                Some(LanguageResolver::with_transport(p.clone(), None).map_err(|e| RunError::Config(e.to_string()))?)
            }
            None => None,
        };
        for rep in &self.representations {
            match rep {
                RepresentationSpec::WordVectors { path, .. } => {
                    for lang in &self.languages {
                        let resolved = match &resolver {
                            None => Some(lang.clone()),
                            Some(r) => match r.resolve(lang) {
                                Ok(res) if res.provenance != Provenance::Llm => Some(res.language),
                                _ => None,
                            },
                        };
                        if let Some(code) = resolved {
                            require(&fill(path, &code, ""), "word vectors")?;
                        }
                    }
                }
                RepresentationSpec::Precomputed { path, .. } => {
                    let mut stems = vec!["train", eval];
                    if needs_dev {
                        stems.push("dev");
                    }
                    for lang in &self.languages {
                        for stem in &stems {
                            require(&fill(path, lang, stem), "precomputed embeddings")?;
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Substitutes the `{lang}` and `{split}` placeholders.
pub fn fill(template: &str, lang: &str, split: &str) -> PathBuf {
    PathBuf::from(template.replace(LANG_PLACEHOLDER, lang).replace(SPLIT_PLACEHOLDER, split))
}

fn require(path: &Path, what: &str) -> Result<(), RunError> {
    if path.exists() {
        Ok(())
    } else {
        Err(RunError::Config(format!("{what} {} does not exist", path.display())))
    }
}

fn unique<'a>(axis: &str, labels: impl Iterator<Item = &'a str>) -> Result<(), RunError> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(RunError::Config(format!("`{axis}` has two entries labelled `{l}`")));
        }
    }
    Ok(())
}
