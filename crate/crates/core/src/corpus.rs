//! Loading, validating and writing emotion-annotated CSV splits.
//!
//! Files follow the shared-task layout: a header row with `id`, `text` and the
//! six emotion columns, comma separated, double-quote quoted, UTF-8. Unlabeled
//! test files omit the emotion columns entirely.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::labels::{EmotionLabels, LabelMatrix, EMOTIONS, NUM_EMOTIONS};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed CSV: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: column `{column}` has value {value:?}, expected 0 or 1")]
    BadLabel { path: PathBuf, row: usize, column: String, value: String },
    #[error("{path}: row {row}: text is empty")]
    EmptyText { path: PathBuf, row: usize },
    #[error("{path}: row {row}: duplicate id `{id}`")]
    DuplicateId { path: PathBuf, row: usize, id: String },
    #[error("{path}: dataset is empty")]
    EmptyDataset { path: PathBuf },
    #[error("split {language}/{role} has no labels")]
    NoLabels { language: String, role: SplitRole },
    #[error("split {language}/{role}: expected {expected} documents, found {actual}")]
    CountMismatch { language: String, role: SplitRole, expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Dev,
    Test,
}

impl SplitRole {
    pub const ALL: [SplitRole; 3] = [SplitRole::Train, SplitRole::Dev, SplitRole::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitRole::Train => "train",
            SplitRole::Dev => "dev",
            SplitRole::Test => "test",
        }
    }

    /// Train and dev splits must carry labels; test may omit them.
    pub fn requires_labels(self) -> bool {
        !matches!(self, SplitRole::Test)
    }
}

impl fmt::Display for SplitRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: String,
    pub text: String,
    pub labels: Option<EmotionLabels>,
}

/// One language's train, dev or test collection, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub language: String,
    pub role: SplitRole,
    pub documents: Vec<LabeledDocument>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.documents.is_empty() && self.documents.iter().all(|d| d.labels.is_some())
    }

    pub fn ids(&self) -> Vec<&str> {
        self.documents.iter().map(|d| d.id.as_str()).collect()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.text.as_str())
    }

    pub fn label_matrix(&self) -> Result<LabelMatrix, CorpusError> {
        let labels: Option<Vec<EmotionLabels>> = self.documents.iter().map(|d| d.labels).collect();
        match labels {
            Some(l) if !l.is_empty() => Ok(LabelMatrix::from_emotions(&l)),
            _ => Err(CorpusError::NoLabels { language: self.language.clone(), role: self.role }),
        }
    }

    /// Checks the document count against published split sizes.
    pub fn reconcile(&self, declared: &DeclaredCounts) -> Result<(), CorpusError> {
        let expected = declared.get(self.role);
        if expected != self.len() {
            return Err(CorpusError::CountMismatch {
                language: self.language.clone(),
                role: self.role,
                expected,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// Loads a split. The language code is taken from the parent directory name,
/// following the `<data-dir>/<lang>/<role>.csv` layout.
pub fn load_split(path: &Path, role: SplitRole) -> Result<DatasetSplit, CorpusError> {
    let language =
        path.parent().and_then(Path::file_name).map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    load_split_as(path, &language, role)
}

pub fn load_split_as(path: &Path, language: &str, role: SplitRole) -> Result<DatasetSplit, CorpusError> {
    let csv_err = |source| CorpusError::Csv { path: path.to_path_buf(), source };
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(CorpusError::EmptyDataset { path: path.to_path_buf() });
    }

    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let missing = |column: &str| CorpusError::MissingColumn { path: path.to_path_buf(), column: column.to_string() };
    let id_col = find("id").ok_or_else(|| missing("id"))?;
    let text_col = find("text").ok_or_else(|| missing("text"))?;
    let label_cols: Vec<Option<usize>> = EMOTIONS.iter().map(|e| find(e)).collect();
    let any_label = label_cols.iter().any(Option::is_some);
    let label_cols: Option<Vec<usize>> = if any_label || role.requires_labels() {
        let mut cols = Vec::with_capacity(NUM_EMOTIONS);
        for (name, col) in EMOTIONS.iter().zip(&label_cols) {
            cols.push(col.ok_or_else(|| missing(name))?);
        }
        Some(cols)
    } else {
        None
    };

    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(csv_err)?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let id = field(id_col).to_string();
        let text = field(text_col).to_string();
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText { path: path.to_path_buf(), row });
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { path: path.to_path_buf(), row, id });
        }
        let labels = match &label_cols {
            None => None,
            Some(cols) => {
                let mut slots = [0u8; NUM_EMOTIONS];
                for (slot, (&c, name)) in cols.iter().zip(EMOTIONS.iter()).enumerate() {
                    let raw = field(c).trim();
                    slots[slot] = match raw {
                        "0" => 0,
                        "1" => 1,
                        _ => {
                            return Err(CorpusError::BadLabel {
                                path: path.to_path_buf(),
                                row,
                                column: name.to_string(),
                                value: raw.to_string(),
                            })
                        }
                    };
                }
                Some(EmotionLabels(slots))
            }
        };
        documents.push(LabeledDocument { id, text, labels });
    }
    if documents.is_empty() {
        return Err(CorpusError::EmptyDataset { path: path.to_path_buf() });
    }
    Ok(DatasetSplit { language: language.to_string(), role, documents })
}

/// Writes a split in the same dialect `load_split` reads. Label columns are
/// emitted only when every document is labeled.
pub fn write_split(split: &DatasetSplit, path: &Path) -> Result<(), CorpusError> {
    let csv_err = |source| CorpusError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let labeled = split.is_labeled();
    let mut header = vec!["id", "text"];
    if labeled {
        header.extend(EMOTIONS);
    }
    w.write_record(&header).map_err(csv_err)?;
    for doc in &split.documents {
        let mut rec = vec![doc.id.clone(), doc.text.clone()];
        if let (true, Some(l)) = (labeled, doc.labels) {
            rec.extend(l.0.iter().map(|v| v.to_string()));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

/// Per-label positive/negative counts for one split.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelBalance {
    pub label: &'static str,
    pub positives: usize,
    pub negatives: usize,
}

impl LabelBalance {
    pub fn positive_fraction(&self) -> f64 {
        let n = self.positives + self.negatives;
        if n == 0 {
            0.0
        } else {
            self.positives as f64 / n as f64
        }
    }

    pub fn negative_fraction(&self) -> f64 {
        1.0 - self.positive_fraction()
    }
}

pub fn summarize(split: &DatasetSplit) -> Result<Vec<LabelBalance>, CorpusError> {
    let labels = split.label_matrix()?;
    Ok(EMOTIONS
        .iter()
        .enumerate()
        .map(|(j, &label)| {
            let positives = labels.rows().filter(|r| r[j] == 1).count();
            LabelBalance { label, positives, negatives: labels.n_rows() - positives }
        })
        .collect())
}

/// Published train/dev/test sizes for one language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeclaredCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl DeclaredCounts {
    pub fn get(&self, role: SplitRole) -> usize {
        match role {
            SplitRole::Train => self.train,
            SplitRole::Dev => self.dev,
            SplitRole::Test => self.test,
        }
    }
}

/// Track A split sizes keyed by shared-task language code.
const DECLARED: &[(&str, &str, [usize; 3])] = &[
    ("pcm", "Nigerian Pidgin", [3728, 620, 1870]),
    ("tir", "Tigrinya", [3681, 614, 1840]),
    ("amh", "Amharic", [3549, 592, 1774]),
    ("orm", "Oromo", [3442, 574, 1721]),
    ("som", "Somali", [3392, 566, 1696]),
    ("swa", "Swahili", [3307, 551, 1656]),
    ("yor", "Yoruba", [2992, 497, 1500]),
    ("ibo", "Igbo", [2880, 479, 1444]),
    ("eng", "English", [2768, 116, 2767]),
    ("rus", "Russian", [2679, 199, 1000]),
    ("chn", "Chinese", [2642, 200, 2642]),
    ("deu", "German", [2603, 200, 2604]),
    ("hin", "Hindi", [2556, 100, 1010]),
    ("ukr", "Ukrainian", [2466, 249, 2234]),
    ("kin", "Kinyarwanda", [2451, 407, 1231]),
    ("mar", "Marathi", [2415, 100, 1000]),
    ("ptbr", "Portuguese (Brazilian)", [2226, 200, 2226]),
    ("hau", "Hausa", [2145, 356, 1080]),
    ("esp", "Spanish", [1996, 184, 1695]),
    ("ary", "Moroccan Arabic", [1608, 267, 812]),
    ("vmw", "Makhuwa", [1551, 258, 777]),
    ("ptmz", "Portuguese (Mozambican)", [1546, 257, 776]),
    ("ron", "Romanian", [1241, 123, 1119]),
    ("afr", "Afrikaans", [1222, 98, 1065]),
    ("swe", "Swedish", [1187, 200, 1188]),
    ("tat", "Tatar", [1000, 200, 1000]),
    ("sun", "Sundanese", [924, 199, 926]),
    ("arq", "Algerian Arabic", [901, 100, 902]),
];

pub fn declared_counts(language: &str) -> Option<DeclaredCounts> {
    DECLARED.iter().find(|(code, _, _)| *code == language).map(|(_, _, [train, dev, test])| DeclaredCounts {
        train: *train,
        dev: *dev,
        test: *test,
    })
}

/// Language codes with published split sizes, largest training set first.
pub fn declared_languages() -> impl Iterator<Item = (&'static str, &'static str)> {
    DECLARED.iter().map(|(code, name, _)| (*code, *name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    const HEADER: &str = "id,text,anger,disgust,fear,joy,sadness,surprise\n";

    #[test]
    fn loads_single_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "train.csv", &format!("{HEADER}x1,\"hello\",0,0,0,1,0,0\n"));
        let s = load_split(&p, SplitRole::Train).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.documents[0].text, "hello");
        assert_eq!(s.documents[0].labels, Some(EmotionLabels([0, 0, 0, 1, 0, 0])));
    }

    #[test]
    fn non_binary_label_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{HEADER}a,ok,0,0,0,0,0,0\nb,bad,2,0,0,0,0,0\n");
        let p = write(dir.path(), "train.csv", &body);
        match load_split(&p, SplitRole::Train).unwrap_err() {
            CorpusError::BadLabel { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "anger");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "train.csv", "id,text,anger,disgust,fear,joy,sadness\na,t,0,0,0,0,0\n");
        match load_split(&p, SplitRole::Train).unwrap_err() {
            CorpusError::MissingColumn { column, .. } => assert_eq!(column, "surprise"),
            e => panic!("unexpected {e}"),
        }
        let p = write(dir.path(), "dev.csv", "ident,text\na,t\n");
        assert!(matches!(
            load_split(&p, SplitRole::Test).unwrap_err(),
            CorpusError::MissingColumn { column, .. } if column == "id"
        ));
    }

    #[test]
    fn empty_and_header_only_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "");
        assert!(matches!(load_split(&p, SplitRole::Train), Err(CorpusError::EmptyDataset { .. })));
        let p = write(dir.path(), "b.csv", HEADER);
        assert!(matches!(load_split(&p, SplitRole::Train), Err(CorpusError::EmptyDataset { .. })));
    }

    #[test]
    fn unlabeled_test_keeps_labels_absent() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "test.csv", "id,text\nq1,something\n");
        let s = load_split(&p, SplitRole::Test).unwrap();
        assert_eq!(s.documents[0].labels, None);
        assert!(!s.is_labeled());
        assert!(matches!(summarize(&s), Err(CorpusError::NoLabels { .. })));
    }

    #[test]
    fn duplicate_ids_are_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "test.csv", "id,text\nq1,a\nq1,b\n");
        assert!(matches!(load_split(&p, SplitRole::Test), Err(CorpusError::DuplicateId { row: 2, .. })));
    }

    #[test]
    fn whitespace_text_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "test.csv", "id,text\nq1,\"  \"\n");
        assert!(matches!(load_split(&p, SplitRole::Test), Err(CorpusError::EmptyText { row: 1, .. })));
    }

    #[test]
    fn summarize_counts_joy() {
        let docs = [1u8, 0, 1]
            .iter()
            .enumerate()
            .map(|(i, &j)| LabeledDocument {
                id: i.to_string(),
                text: "t".into(),
                labels: Some(EmotionLabels([0, 0, 0, j, 0, 0])),
            })
            .collect();
        let s = DatasetSplit { language: "x".into(), role: SplitRole::Train, documents: docs };
        let joy = &summarize(&s).unwrap()[3];
        assert_eq!((joy.positives, joy.negatives), (2, 1));
        assert_eq!(joy.positive_fraction(), 2.0 / 3.0);
    }

    #[test]
    fn hindi_anger_imbalance() {
        // 562 positives of 2,556 leaves more than 78% negatives.
        let docs = (0..2556)
            .map(|i| LabeledDocument {
                id: i.to_string(),
                text: "t".into(),
                labels: Some(EmotionLabels([(i < 562) as u8, 0, 0, 0, 0, 0])),
            })
            .collect();
        let s = DatasetSplit { language: "hin".into(), role: SplitRole::Train, documents: docs };
        let anger = &summarize(&s).unwrap()[0];
        assert!((anger.positive_fraction() - 0.2199).abs() < 1e-4);
        assert!(anger.negative_fraction() > 0.78);
        s.reconcile(&declared_counts("hin").unwrap()).unwrap();
    }

    #[test]
    fn all_positive_fraction_is_one() {
        let docs =
            vec![LabeledDocument { id: "a".into(), text: "t".into(), labels: Some(EmotionLabels([1, 0, 0, 0, 0, 0])) }];
        let s = DatasetSplit { language: "x".into(), role: SplitRole::Train, documents: docs };
        assert_eq!(summarize(&s).unwrap()[0].positive_fraction(), 1.0);
    }

    #[test]
    fn declared_table_has_all_languages() {
        assert_eq!(declared_languages().count(), 28);
        assert_eq!(declared_counts("rus"), Some(DeclaredCounts { train: 2679, dev: 199, test: 1000 }));
        let total: usize = DECLARED.iter().map(|(_, _, c)| c[0]).sum();
        assert_eq!(total, 65098);
    }
}
