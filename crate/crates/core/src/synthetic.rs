//! Generator for a small separable corpus with matching word vectors and
//! document embeddings, used for smoke tests, benchmarks and the bundled
//! example experiment.
//!
//! Every emotion owns a private vocabulary. A document draws words from the
//! vocabularies of its labels plus shared filler words, so the label set is
//! recoverable from the words alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_split, DatasetSplit, LabeledDocument, SplitRole};
use crate::labels::{EmotionLabels, NUM_EMOTIONS};
use crate::learn::{ClassifierSpec, HyperGrid};
use crate::runner::{ClassifierEntry, ExperimentConfig, RepresentationSpec, RunError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub language: String,
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub words_per_label: usize,
    pub filler_words: usize,
    /// Label words drawn per active label.
    pub label_tokens: usize,
    pub filler_tokens: usize,
    /// Chance that a document carries a second label.
    pub second_label_prob: f64,
    pub word_dim: usize,
    pub doc_dim: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            language: "syn".into(),
            n_train: 400,
            n_dev: 100,
            n_test: 100,
            words_per_label: 12,
            filler_words: 40,
            label_tokens: 4,
            filler_tokens: 6,
            second_label_prob: 0.3,
            word_dim: 16,
            doc_dim: 12,
            seed: 7,
        }
    }
}

const SYLLABLES: [&str; 16] =
    ["ba", "ko", "mi", "tu", "re", "sa", "ne", "lo", "vi", "da", "pe", "zu", "fa", "gi", "ho", "ru"];

/// A pronounceable pseudo-word, distinct for every `n`.
fn pseudo_word(mut n: usize) -> String {
    let mut w = String::new();
    for _ in 0..3 {
        w.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
    }
    w
}

pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub label_words: Vec<Vec<String>>,
    pub filler: Vec<String>,
    pub train: DatasetSplit,
    pub dev: DatasetSplit,
    pub test: DatasetSplit,
}

impl SyntheticCorpus {
    pub fn generate(spec: &SyntheticSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let label_words: Vec<Vec<String>> = (0..NUM_EMOTIONS)
            .map(|l| (0..spec.words_per_label).map(|j| pseudo_word(l * spec.words_per_label + j)).collect())
            .collect();
        let offset = NUM_EMOTIONS * spec.words_per_label;
        let filler: Vec<String> = (0..spec.filler_words).map(|j| pseudo_word(offset + j)).collect();

        let mut make = |role: SplitRole, n: usize, start: usize| {
            let documents = (0..n)
                .map(|i| {
                    // balanced primary labels
                    let primary = (start + i) % NUM_EMOTIONS;
                    let mut slots = [0u8; NUM_EMOTIONS];
                    slots[primary] = 1;
                    if rng.gen_bool(spec.second_label_prob) {
                        let other = (primary + rng.gen_range(1..NUM_EMOTIONS)) % NUM_EMOTIONS;
                        slots[other] = 1;
                    }
                    let mut words: Vec<&str> = Vec::new();
                    for (l, &s) in slots.iter().enumerate() {
                        if s == 1 {
                            words.extend(
                                (0..spec.label_tokens).map(|_| label_words[l].choose(&mut rng).unwrap().as_str()),
                            );
                        }
                    }
                    words.extend((0..spec.filler_tokens).map(|_| filler.choose(&mut rng).unwrap().as_str()));
                    words.shuffle(&mut rng);
                    LabeledDocument {
                        id: format!("{}_{}_{:04}", spec.language, role.as_str(), i),
                        text: words.join(" "),
                        labels: Some(EmotionLabels(slots)),
                    }
                })
                .collect();
            DatasetSplit { language: spec.language.clone(), role, documents }
        };
        let train = make(SplitRole::Train, spec.n_train, 0);
        let dev = make(SplitRole::Dev, spec.n_dev, spec.n_train);
        let test = make(SplitRole::Test, spec.n_test, spec.n_train + spec.n_dev);
        Self { spec: spec.clone(), label_words, filler, train, dev, test }
    }

    /// `.vec` text: label words sit near a per-label centroid, filler words near the origin.
    pub fn word_vectors(&self) -> String {
        let d = self.spec.word_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ 0x5eed);
        let n = self.label_words.iter().map(Vec::len).sum::<usize>() + self.filler.len();
        let mut out = format!("{n} {d}\n");
        let mut line = |word: &str, centre: Option<&[f64]>, rng: &mut ChaCha8Rng| {
            out.push_str(word);
            for k in 0..d {
                let v = centre.map_or(0.0, |c| c[k]) + gaussian(rng) * 0.3;
                let _ = write!(out, " {v:.6}");
            }
            out.push('\n');
        };
        let centres: Vec<Vec<f64>> = (0..NUM_EMOTIONS).map(|_| (0..d).map(|_| gaussian(&mut rng)).collect()).collect();
        for (words, c) in self.label_words.iter().zip(&centres) {
            for w in words {
                line(w, Some(c), &mut rng);
            }
        }
        for w in &self.filler {
            line(w, None, &mut rng);
        }
        out
    }

    /// `id,v1..vd` CSV of document vectors: summed label centroids plus noise.
    #[allow(clippy::needless_range_loop)]
    pub fn document_embeddings(&self, split: &DatasetSplit) -> String {
        let d = self.spec.doc_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ 0xd0c5);
        let centres: Vec<Vec<f64>> = (0..NUM_EMOTIONS).map(|_| (0..d).map(|_| gaussian(&mut rng)).collect()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ split.role as u64 ^ 0xe111);
        let mut out = String::from("id");
        for k in 0..d {
            let _ = write!(out, ",v{k}");
        }
        out.push('\n');
        for doc in &split.documents {
            let labels = doc.labels.expect("synthetic documents are labeled");
            out.push_str(&doc.id);
            for k in 0..d {
                let centre: f64 = (0..NUM_EMOTIONS).filter(|&l| labels.is_set(l)).map(|l| centres[l][k]).sum();
                let _ = write!(out, ",{:.6}", centre + gaussian(&mut rng) * 0.4);
            }
            out.push('\n');
        }
        out
    }

    /// Writes `data/<lang>/{train,dev,test}.csv`, `vectors/<lang>.vec`,
    /// `embeddings/<lang>/<split>.csv` and `config.json` under `dir`, and
    /// returns the config with paths resolved.
    pub fn write(&self, dir: &Path) -> Result<ExperimentConfig, RunError> {
        let lang = &self.spec.language;
        let data = dir.join("data").join(lang);
        let emb = dir.join("embeddings").join(lang);
        let vectors = dir.join("vectors");
        for d in [&data, &emb, &vectors] {
            std::fs::create_dir_all(d).map_err(|source| RunError::Io { path: d.clone(), source })?;
        }
        let put =
            |path: PathBuf, text: String| std::fs::write(&path, text).map_err(|source| RunError::Io { path, source });
        for split in [&self.train, &self.dev, &self.test] {
            write_split(split, &data.join(format!("{}.csv", split.role.as_str())))?;
            put(emb.join(format!("{}.csv", split.role.as_str())), self.document_embeddings(split))?;
        }
        put(vectors.join(format!("{lang}.vec")), self.word_vectors())?;
        let cfg = example_config(lang);
        put(dir.join("config.json"), serde_json::to_string_pretty(&cfg).expect("configs serialize") + "\n")?;
        let mut cfg = cfg;
        cfg.rebase(dir);
        Ok(cfg)
    }
}

/// tfidf, word vectors and document embeddings × dt, voting, mlp × PCA off/on,
/// with the default MLP grid and paths relative to the config file.
pub fn example_config(lang: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(
        r#"{"data_dir": "data", "languages": [], "representations": [], "classifiers": []}"#,
    )
    .expect("static config parses");
    cfg.languages = vec![lang.to_string()];
    cfg.representations = vec![
        RepresentationSpec::Tfidf { name: None },
        RepresentationSpec::WordVectors { path: "vectors/{lang}.vec".into(), name: Some("word_vectors".into()) },
        RepresentationSpec::Precomputed { path: "embeddings/{lang}/{split}.csv".into(), name: Some("sentence".into()) },
    ];
    cfg.classifiers = [ClassifierSpec::dt(), ClassifierSpec::voting(), ClassifierSpec::mlp()]
        .into_iter()
        .map(ClassifierEntry::new)
        .collect();
    cfg.mlp_grid = Some(HyperGrid::default_mlp());
    cfg.seed = 7;
    cfg
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn words_are_distinct() {
        let words: HashSet<String> = (0..500).map(pseudo_word).collect();
        assert_eq!(words.len(), 500);
    }

    #[test]
    fn corpus_shape_and_determinism() {
        let spec = SyntheticSpec::default();
        let a = SyntheticCorpus::generate(&spec);
        let b = SyntheticCorpus::generate(&spec);
        assert_eq!(a.train, b.train);
        assert_eq!(a.word_vectors(), b.word_vectors());
        assert_eq!((a.train.len(), a.dev.len(), a.test.len()), (400, 100, 100));
        let y = a.train.label_matrix().unwrap();
        for l in 0..NUM_EMOTIONS {
            let pos = (0..y.n_rows()).filter(|&r| y.get(r, l) == 1).count();
            assert!(pos >= 400 / 6, "label {l} has {pos} positives");
        }
        for doc in &a.test.documents {
            let labels = doc.labels.unwrap();
            let words: Vec<&str> = doc.text.split(' ').collect();
            for l in 0..NUM_EMOTIONS {
                let present = words.iter().any(|w| a.label_words[l].iter().any(|x| x == w));
                assert_eq!(present, labels.is_set(l));
            }
        }
    }
}
