use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::matrix::DenseMatrix;
use crate::tokenize::TokenSequence;

use super::EmbeddingError;

/// Word vectors loaded from a text `.vec` file.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    pub language: String,
    pub source: PathBuf,
}

impl EmbeddingTable {
    /// Builds a table from in-memory vectors. Later duplicates overwrite earlier ones.
    pub fn from_pairs<I, S>(language: &str, dimension: usize, pairs: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        if dimension == 0 {
            return Err(EmbeddingError::ZeroDimension { path: PathBuf::new() });
        }
        let mut table = Self {
            dimension,
            index: HashMap::new(),
            data: Vec::new(),
            language: language.to_string(),
            source: PathBuf::new(),
        };
        for (line, (tok, v)) in pairs.into_iter().enumerate() {
            if v.len() != dimension {
                return Err(EmbeddingError::Dimension {
                    path: PathBuf::new(),
                    line: line + 1,
                    expected: dimension,
                    actual: v.len(),
                });
            }
            table.insert(tok.into(), &v);
        }
        Ok(table)
    }

    fn insert(&mut self, token: String, v: &[f32]) {
        match self.index.get(&token) {
            Some(&slot) => self.data[slot * self.dimension..(slot + 1) * self.dimension].copy_from_slice(v),
            None => {
                self.index.insert(token, self.index.len());
                self.data.extend_from_slice(v);
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&slot| &self.data[slot * self.dimension..(slot + 1) * self.dimension])
    }
}

/// Loads every vector in a `.vec` text file.
pub fn load_word_vectors(path: &Path) -> Result<EmbeddingTable, EmbeddingError> {
    load_word_vectors_filtered(path, None)
}

/// Loads a `.vec` file, keeping only tokens in `keep` when given. Every line
/// is still checked for a consistent dimension.
pub fn load_word_vectors_filtered(
    path: &Path,
    keep: Option<&HashSet<String>>,
) -> Result<EmbeddingTable, EmbeddingError> {
    let io_err = |source| EmbeddingError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(std::fs::File::open(path).map_err(io_err)?);
    let mut dimension: Option<usize> = None;
    let mut table = EmbeddingTable {
        dimension: 0,
        index: HashMap::new(),
        data: Vec::new(),
        language: String::new(),
        source: path.to_path_buf(),
    };
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err)?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let token = fields.next().expect("non-empty line");
        if line_no == 1 {
            if let Some(d) = parse_header(line) {
                if d == 0 {
                    return Err(EmbeddingError::ZeroDimension { path: path.to_path_buf() });
                }
                dimension = Some(d);
                continue;
            }
        }
        let wanted = keep.is_none_or(|k| k.contains(token));
        let count = if wanted {
            values.clear();
            for f in fields {
                let v: f32 = f.parse().map_err(|_| EmbeddingError::BadValue {
                    path: path.to_path_buf(),
                    line: line_no,
                    value: f.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(EmbeddingError::BadValue {
                        path: path.to_path_buf(),
                        line: line_no,
                        value: f.to_string(),
                    });
                }
                values.push(v);
            }
            values.len()
        } else {
            fields.count()
        };
        let d = *dimension.get_or_insert(count);
        if count != d || d == 0 {
            return Err(EmbeddingError::Dimension {
                path: path.to_path_buf(),
                line: line_no,
                expected: d,
                actual: count,
            });
        }
        if wanted {
            table.dimension = d;
            table.insert(token.to_string(), &values);
        }
    }
    match dimension {
        Some(d) => table.dimension = d,
        None => return Err(EmbeddingError::NoVectors { path: path.to_path_buf() }),
    }
    Ok(table)
}

pub(super) fn parse_header(line: &str) -> Option<usize> {
    let mut it = line.split_whitespace();
    let (count, dim) = (it.next()?, it.next()?);
    if it.next().is_some() {
        return None;
    }
    count.parse::<usize>().ok()?;
    dim.parse::<usize>().ok()
}

/// Counts of out-of-vocabulary tokens seen while pooling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OovReport {
    pub documents: usize,
    /// Documents with no in-vocabulary token (including empty ones); pooled to zero.
    pub fully_oov_documents: usize,
    pub tokens: usize,
    pub oov_tokens: usize,
}

/// Mean-pools each document's in-vocabulary word vectors.
pub fn embed_documents(docs: &[TokenSequence], table: &EmbeddingTable) -> (DenseMatrix, OovReport) {
    let d = table.dimension();
    let mut out = DenseMatrix::zeros(docs.len(), d);
    let mut report = OovReport { documents: docs.len(), ..Default::default() };
    let mut acc = vec![0.0f64; d];
    for (i, doc) in docs.iter().enumerate() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut hits = 0usize;
        for tok in &doc.tokens {
            report.tokens += 1;
            match table.get(tok) {
                Some(v) => {
                    hits += 1;
                    acc.iter_mut().zip(v).for_each(|(a, &x)| *a += x as f64);
                }
                None => report.oov_tokens += 1,
            }
        }
        if hits == 0 {
            report.fully_oov_documents += 1;
            continue;
        }
        let row = out.row_mut(i);
        row.iter_mut().zip(&acc).for_each(|(r, a)| *r = a / hits as f64);
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec_file(body: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.vec");
        std::fs::write(&p, body).unwrap();
        (dir, p)
    }

    #[test]
    fn parses_header_and_rows() {
        let (_d, p) = vec_file("2 3\na 1 0 0\nb 0 1 0\n");
        let t = load_word_vectors(&p).unwrap();
        assert_eq!((t.dimension(), t.len()), (3, 2));
        assert_eq!(t.get("b"), Some(&[0.0f32, 1.0, 0.0][..]));
    }

    #[test]
    fn dimension_from_first_row_without_header() {
        let (_d, p) = vec_file("a 1 2\nb 3 4\n");
        assert_eq!(load_word_vectors(&p).unwrap().dimension(), 2);
    }

    #[test]
    fn short_line_is_format_error() {
        let (_d, p) = vec_file("2 3\na 1 0 0\nb 0 1\n");
        match load_word_vectors(&p).unwrap_err() {
            EmbeddingError::Dimension { line, expected, actual, .. } => {
                assert_eq!((line, expected, actual), (3, 3, 2))
            }
            e => panic!("{e}"),
        }
        // Filtering does not skip the dimension check.
        let keep = HashSet::from(["a".to_string()]);
        assert!(load_word_vectors_filtered(&p, Some(&keep)).is_err());
    }

    #[test]
    fn duplicates_overwrite_and_zero_vectors_allowed() {
        let (_d, p) = vec_file("a 1 1\na 2 2\nz 0 0\n");
        let t = load_word_vectors(&p).unwrap();
        assert_eq!(t.get("a"), Some(&[2.0f32, 2.0][..]));
        assert_eq!(t.get("z"), Some(&[0.0f32, 0.0][..]));
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn non_numeric_value() {
        let (_d, p) = vec_file("a 1 x\n");
        assert!(matches!(load_word_vectors(&p), Err(EmbeddingError::BadValue { line: 1, .. })));
    }

    #[test]
    fn mean_pooling() {
        let t = EmbeddingTable::from_pairs("x", 2, [("a", vec![1.0, 3.0]), ("b", vec![3.0, 1.0])]).unwrap();
        let docs = vec![
            TokenSequence::from_words("0", "a"),
            TokenSequence::from_words("1", "a b"),
            TokenSequence::from_words("2", "z"),
            TokenSequence::from_words("3", "a q"),
        ];
        let (m, report) = embed_documents(&docs, &t);
        assert_eq!(m.row(0), &[1.0, 3.0]);
        assert_eq!(m.row(1), &[2.0, 2.0]);
        assert_eq!(m.row(2), &[0.0, 0.0]);
        assert_eq!(m.row(3), &[1.0, 3.0]);
        assert_eq!(report.fully_oov_documents, 1);
        assert_eq!((report.tokens, report.oov_tokens), (6, 2));
    }

    proptest! {
        #[test]
        fn pooling_is_permutation_invariant(
            idx in proptest::collection::vec(0usize..4, 1..12),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let t = EmbeddingTable::from_pairs("x", 3, [
                ("a", vec![1.0, 2.0, 3.0]), ("b", vec![-1.0, 0.5, 0.0]),
                ("c", vec![0.25, 0.0, 8.0]), ("d", vec![4.0, 4.0, -4.0]),
            ]).unwrap();
            let words = ["a", "b", "c", "d"];
            let toks: Vec<String> = idx.iter().map(|&i| words[i].to_string()).collect();
            let mut shuffled = toks.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (m1, _) = embed_documents(&[TokenSequence::new("", toks)], &t);
            let (m2, _) = embed_documents(&[TokenSequence::new("", shuffled)], &t);
            for (x, y) in m1.row(0).iter().zip(m2.row(0)) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn constant_vector_pools_to_itself(n in 1usize..20, v in proptest::collection::vec(-100i32..100, 3)) {
            let v: Vec<f32> = v.into_iter().map(|x| x as f32 / 8.0).collect();
            let t = EmbeddingTable::from_pairs("x", 3, [("w", v.clone())]).unwrap();
            let (m, _) = embed_documents(&[TokenSequence::new("", vec!["w".into(); n])], &t);
            for (x, y) in m.row(0).iter().zip(&v) {
                prop_assert_eq!(*x, *y as f64);
            }
        }
    }
}
