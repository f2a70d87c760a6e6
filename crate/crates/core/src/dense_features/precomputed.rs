use std::collections::HashMap;
use std::path::Path;

use crate::matrix::DenseMatrix;

use super::vectors::{load_word_vectors, parse_header};
use super::EmbeddingError;

/// Loads externally computed document vectors and aligns them to `ids`.
///
/// Files ending in `.csv` are read as `id,v1,...,vd` (an optional header row
/// whose first cell is `id` is skipped); anything else is read as the
/// `.vec` text format keyed by document id.
pub fn load_precomputed_embeddings(path: &Path, ids: &[&str]) -> Result<DenseMatrix, EmbeddingError> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (dimension, vectors) = if is_csv { read_csv(path)? } else { read_vec(path)? };

    let missing: Vec<String> = ids.iter().filter(|id| !vectors.contains_key(**id)).map(|s| s.to_string()).collect();
    if !missing.is_empty() {
        return Err(EmbeddingError::Alignment { path: path.to_path_buf(), missing });
    }
    let mut data = Vec::with_capacity(ids.len() * dimension);
    for id in ids {
        data.extend_from_slice(&vectors[*id]);
    }
    Ok(DenseMatrix::new(ids.len(), dimension, data).expect("validated while reading"))
}

type Vectors = HashMap<String, Vec<f64>>;

fn read_csv(path: &Path) -> Result<(usize, Vectors), EmbeddingError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| EmbeddingError::Csv { path: path.to_path_buf(), message: e.to_string() })?;
    let mut vectors = HashMap::new();
    let mut dimension = None;
    for (i, rec) in reader.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| EmbeddingError::Csv { path: path.to_path_buf(), message: e.to_string() })?;
        let Some(id) = rec.get(0) else { continue };
        if line == 1 && id.trim() == "id" {
            continue;
        }
        let mut row = Vec::with_capacity(rec.len().saturating_sub(1));
        for cell in rec.iter().skip(1) {
            let v: f64 = cell.trim().parse().map_err(|_| EmbeddingError::BadValue {
                path: path.to_path_buf(),
                line,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(EmbeddingError::BadValue { path: path.to_path_buf(), line, value: cell.to_string() });
            }
            row.push(v);
        }
        let d = *dimension.get_or_insert(row.len());
        if row.len() != d || d == 0 {
            return Err(EmbeddingError::Dimension { path: path.to_path_buf(), line, expected: d, actual: row.len() });
        }
        if vectors.insert(id.to_string(), row).is_some() {
            return Err(EmbeddingError::DuplicateId { path: path.to_path_buf(), id: id.to_string() });
        }
    }
    let d = dimension.ok_or_else(|| EmbeddingError::NoVectors { path: path.to_path_buf() })?;
    Ok((d, vectors))
}

fn read_vec(path: &Path) -> Result<(usize, Vectors), EmbeddingError> {
    let table = load_word_vectors(path)?;
    // Re-read ids in file order to detect duplicates, which the word-vector
    // loader would silently overwrite.
    let body =
        std::fs::read_to_string(path).map_err(|source| EmbeddingError::Io { path: path.to_path_buf(), source })?;
    let mut seen = std::collections::HashSet::new();
    for (i, line) in body.lines().enumerate() {
        let Some(id) = line.split_whitespace().next() else { continue };
        if i == 0 && parse_header(line).is_some() {
            continue;
        }
        if !seen.insert(id) {
            return Err(EmbeddingError::DuplicateId { path: path.to_path_buf(), id: id.to_string() });
        }
    }
    let vectors = seen
        .into_iter()
        .map(|id| (id.to_string(), table.get(id).unwrap().iter().map(|&v| v as f64).collect()))
        .collect();
    Ok((table.dimension(), vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(name: &str, body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        (dir, p)
    }

    #[test]
    fn csv_rows_follow_id_order() {
        let (_d, p) = file("e.csv", "id,v1,v2\na,1,2\nb,3,4\n");
        let m = load_precomputed_embeddings(&p, &["b", "a"]).unwrap();
        assert_eq!(m.as_slice(), &[3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn missing_id_is_named() {
        let (_d, p) = file("e.csv", "a,1,2\n");
        match load_precomputed_embeddings(&p, &["a", "ghost"]).unwrap_err() {
            EmbeddingError::Alignment { missing, .. } => assert_eq!(missing, ["ghost"]),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn dimension_mismatch_and_duplicates() {
        let (_d, p) = file("e.csv", "a,1,2\nb,3\n");
        assert!(matches!(load_precomputed_embeddings(&p, &["a"]), Err(EmbeddingError::Dimension { line: 2, .. })));
        let (_d, p) = file("e.csv", "a,1,2\na,3,4\n");
        assert!(matches!(load_precomputed_embeddings(&p, &["a"]), Err(EmbeddingError::DuplicateId { .. })));
        let (_d, p) = file("e.vec", "a 1 2\na 3 4\n");
        assert!(matches!(load_precomputed_embeddings(&p, &["a"]), Err(EmbeddingError::DuplicateId { .. })));
    }

    #[test]
    fn vec_format_keyed_by_id() {
        let (_d, p) = file("e.vec", "2 2\nd1 0.5 1\nd2 -1 2\n");
        let m = load_precomputed_embeddings(&p, &["d2", "d1"]).unwrap();
        assert_eq!(m.as_slice(), &[-1.0, 2.0, 0.5, 1.0]);
    }
}
