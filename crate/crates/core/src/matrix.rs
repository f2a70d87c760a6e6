//! Row-oriented feature matrices shared by every pipeline stage.
//!
//! Sparse rows come out of the bag-of-words and TF-IDF vectorizers; dense rows
//! come out of embedding pooling, precomputed vectors and PCA. Learners consume
//! either through [`FeatureMatrix`] and its [`RowView`].

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MatrixError {
    #[error("expected {expected} values for a {rows} x {cols} matrix, got {actual}")]
    Shape { rows: usize, cols: usize, expected: usize, actual: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("row {row}: column {col} out of range for {n_cols} columns")]
    ColumnOutOfRange { row: usize, col: usize, n_cols: usize },
    #[error("row {row}: columns must be strictly increasing")]
    UnsortedRow { row: usize },
}

/// Row-major dense matrix of finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if data.len() != n_rows * n_cols {
            return Err(MatrixError::Shape {
                rows: n_rows,
                cols: n_cols,
                expected: n_rows * n_cols,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite { row: pos / n_cols, col: pos % n_cols });
        }
        Ok(Self { n_rows, n_cols, data })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, MatrixError> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(MatrixError::Shape { rows: rows.len(), cols: n_cols, expected: n_cols, actual: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), n_cols, data)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }
}

/// Compressed rows: each row is a list of `(column, value)` pairs sorted by
/// column, with no explicit zeros and no repeated columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    /// Validates and takes ownership of the rows. Explicit zeros are dropped.
    pub fn new(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, MatrixError> {
        let mut rows = rows;
        for (r, row) in rows.iter_mut().enumerate() {
            row.retain(|&(_, v)| v != 0.0);
            for (k, &(c, v)) in row.iter().enumerate() {
                if c >= n_cols {
                    return Err(MatrixError::ColumnOutOfRange { row: r, col: c, n_cols });
                }
                if !v.is_finite() {
                    return Err(MatrixError::NonFinite { row: r, col: c });
                }
                if k > 0 && row[k - 1].0 >= c {
                    return Err(MatrixError::UnsortedRow { row: r });
                }
            }
        }
        Ok(Self { n_cols, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_rows(), self.n_cols);
        for (i, row) in self.rows.iter().enumerate() {
            let out = m.row_mut(i);
            for &(c, v) in row {
                out[c] = v;
            }
        }
        m
    }

    pub(crate) fn rows_mut(&mut self) -> impl Iterator<Item = &mut Vec<(usize, f64)>> {
        self.rows.iter_mut()
    }
}

/// A document-feature matrix in either storage layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureMatrix {
    Sparse(SparseMatrix),
    Dense(DenseMatrix),
}

impl From<SparseMatrix> for FeatureMatrix {
    fn from(m: SparseMatrix) -> Self {
        FeatureMatrix::Sparse(m)
    }
}

impl From<DenseMatrix> for FeatureMatrix {
    fn from(m: DenseMatrix) -> Self {
        FeatureMatrix::Dense(m)
    }
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        match self {
            FeatureMatrix::Sparse(m) => m.n_rows(),
            FeatureMatrix::Dense(m) => m.n_rows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            FeatureMatrix::Sparse(m) => m.n_cols(),
            FeatureMatrix::Dense(m) => m.n_cols(),
        }
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        match self {
            FeatureMatrix::Sparse(m) => RowView::Sparse(m.row(i)),
            FeatureMatrix::Dense(m) => RowView::Dense(m.row(i)),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, FeatureMatrix::Sparse(_))
    }

    /// Dense copy of the matrix; borrows when it is already dense.
    pub fn to_dense(&self) -> std::borrow::Cow<'_, DenseMatrix> {
        match self {
            FeatureMatrix::Sparse(m) => std::borrow::Cow::Owned(m.to_dense()),
            FeatureMatrix::Dense(m) => std::borrow::Cow::Borrowed(m),
        }
    }

    /// Column-major list of nonzero entries: `columns[j]` holds `(row, value)`
    /// pairs sorted by row.
    pub fn nonzero_columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.n_cols()];
        for i in 0..self.n_rows() {
            self.row(i).for_each_nonzero(|j, v| cols[j].push((i, v)));
        }
        cols
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Sparse(m) => FeatureMatrix::Sparse(SparseMatrix {
                n_cols: m.n_cols,
                rows: idx.iter().map(|&i| m.rows[i].clone()).collect(),
            }),
            FeatureMatrix::Dense(m) => {
                let mut data = Vec::with_capacity(idx.len() * m.n_cols);
                for &i in idx {
                    data.extend_from_slice(m.row(i));
                }
                FeatureMatrix::Dense(DenseMatrix { n_rows: idx.len(), n_cols: m.n_cols, data })
            }
        }
    }
}

/// Borrowed view of one matrix row.
#[derive(Debug, Clone, Copy)]
pub enum RowView<'a> {
    Sparse(&'a [(usize, f64)]),
    Dense(&'a [f64]),
}

impl RowView<'_> {
    pub fn get(&self, j: usize) -> f64 {
        match self {
            RowView::Dense(r) => r[j],
            RowView::Sparse(r) => match r.binary_search_by_key(&j, |&(c, _)| c) {
                Ok(k) => r[k].1,
                Err(_) => 0.0,
            },
        }
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        match self {
            RowView::Dense(r) => r.iter().zip(w).map(|(a, b)| a * b).sum(),
            RowView::Sparse(r) => r.iter().map(|&(c, v)| v * w[c]).sum(),
        }
    }

    /// `out += alpha * row`
    pub fn axpy(&self, alpha: f64, out: &mut [f64]) {
        match self {
            RowView::Dense(r) => out.iter_mut().zip(r.iter()).for_each(|(o, v)| *o += alpha * v),
            RowView::Sparse(r) => r.iter().for_each(|&(c, v)| out[c] += alpha * v),
        }
    }

    pub fn squared_norm(&self) -> f64 {
        match self {
            RowView::Dense(r) => r.iter().map(|v| v * v).sum(),
            RowView::Sparse(r) => r.iter().map(|(_, v)| v * v).sum(),
        }
    }

    pub fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        match self {
            RowView::Dense(r) => r.iter().enumerate().filter(|(_, v)| **v != 0.0).for_each(|(j, &v)| f(j, v)),
            RowView::Sparse(r) => r.iter().for_each(|&(c, v)| f(c, v)),
        }
    }

    pub fn to_vec(&self, n_cols: usize) -> Vec<f64> {
        match self {
            RowView::Dense(r) => r.to_vec(),
            RowView::Sparse(_) => {
                let mut v = vec![0.0; n_cols];
                self.axpy(1.0, &mut v);
                v
            }
        }
    }

    /// Squared Euclidean distance to a dense query whose squared norm is known.
    pub fn squared_distance(&self, query: &[f64], query_sq_norm: f64) -> f64 {
        match self {
            RowView::Dense(r) => r.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum(),
            RowView::Sparse(r) => {
                let mut d = query_sq_norm;
                for &(c, v) in r.iter() {
                    let q = query[c];
                    d += (v - q) * (v - q) - q * q;
                }
                d.max(0.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_drops_zeros_and_checks_order() {
        let m = SparseMatrix::new(3, vec![vec![(0, 1.0), (1, 0.0), (2, 2.0)]]).unwrap();
        assert_eq!(m.row(0), &[(0, 1.0), (2, 2.0)]);
        assert_eq!(
            SparseMatrix::new(3, vec![vec![(2, 1.0), (1, 1.0)]]).unwrap_err(),
            MatrixError::UnsortedRow { row: 0 }
        );
        assert!(SparseMatrix::new(2, vec![vec![(2, 1.0)]]).is_err());
    }

    #[test]
    fn dense_rejects_nan() {
        assert_eq!(DenseMatrix::new(1, 2, vec![0.0, f64::NAN]).unwrap_err(), MatrixError::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn sparse_and_dense_views_agree() {
        let s = SparseMatrix::new(4, vec![vec![(1, 2.0), (3, -1.0)]]).unwrap();
        let d = s.to_dense();
        let (sv, dv) = (RowView::Sparse(s.row(0)), RowView::Dense(d.row(0)));
        let w = [0.5, 1.0, 2.0, 3.0];
        assert_eq!(sv.dot(&w), dv.dot(&w));
        assert_eq!(sv.get(3), -1.0);
        assert_eq!(sv.get(2), 0.0);
        let q = [1.0, 0.0, 1.0, 1.0];
        let qn = 3.0;
        assert!((sv.squared_distance(&q, qn) - dv.squared_distance(&q, qn)).abs() < 1e-12);
    }
}
