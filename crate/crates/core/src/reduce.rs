//! Unit-norm row scaling followed by PCA projection.
//!
//! PCA is fitted from the thin SVD of the mean-centered data matrix:
//! components are the right singular vectors and the explained variance of
//! component `i` is `s_i^2 / (n - 1)`. Each component is sign-canonicalized so
//! its largest-magnitude entry is non-negative, which makes fitting
//! deterministic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::matrix::{DenseMatrix, FeatureMatrix, RowView};
use crate::sparse_features::l2_normalize;

/// Dense matrices above this many cells (64 MiB) are worth a warning.
const DENSIFY_WARN_CELLS: usize = 8 << 20;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReduceError {
    #[error("PCA needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("PCA needs at least 1 feature")]
    NoFeatures,
    #[error("requested {requested} components but at most {max} are available")]
    TooManyComponents { requested: usize, max: usize },
    #[error("variance fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("input has {actual} columns, model expects {expected}")]
    Shape { expected: usize, actual: usize },
    #[error("singular value decomposition did not converge")]
    NoConvergence,
}

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Components {
    /// `min(n_samples, n_features)`.
    #[default]
    All,
    Fixed(usize),
    /// Smallest `k` whose cumulative explained-variance ratio reaches the fraction.
    VarianceFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    #[serde(default = "yes")]
    pub normalize: bool,
    #[serde(default)]
    pub components: Components,
}

fn yes() -> bool {
    true
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self { normalize: true, components: Components::All }
    }
}

/// Scales every nonzero row to unit L2 norm. Zero rows are left as they are.
pub fn normalize_rows(m: &FeatureMatrix) -> FeatureMatrix {
    match m {
        FeatureMatrix::Sparse(s) => {
            let mut s = s.clone();
            s.rows_mut().for_each(|r| l2_normalize(r));
            FeatureMatrix::Sparse(s)
        }
        FeatureMatrix::Dense(d) => {
            let mut d = d.clone();
            for i in 0..d.n_rows() {
                let row = d.row_mut(i);
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|v| *v /= norm);
                }
            }
            FeatureMatrix::Dense(d)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x d`, rows are principal axes.
    pub components: DenseMatrix,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }
}

pub fn fit_pca(m: &FeatureMatrix, cfg: &ReductionConfig) -> Result<PcaModel, ReduceError> {
    let (n, d) = (m.n_rows(), m.n_cols());
    if n < 2 {
        return Err(ReduceError::TooFewSamples(n));
    }
    if d == 0 {
        return Err(ReduceError::NoFeatures);
    }
    let max = n.min(d);
    match cfg.components {
        Components::Fixed(k) if k == 0 || k > max => return Err(ReduceError::TooManyComponents { requested: k, max }),
        Components::VarianceFraction(q) if !(q > 0.0 && q < 1.0) => return Err(ReduceError::BadFraction(q)),
        _ => {}
    }
    if m.is_sparse() && n * d >= DENSIFY_WARN_CELLS {
        log::warn!("densifying a sparse {n} x {d} matrix for PCA ({:.1} MiB)", (n * d * 8) as f64 / (1024.0 * 1024.0));
    }
    let dense = m.to_dense();

    let mut mean = vec![0.0; d];
    for row in dense.rows() {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| dense.get(i, j) - mean[j]);

    let svd = centered.try_svd(false, true, f64::EPSILON, 0).ok_or(ReduceError::NoConvergence)?;
    let v_t = svd.v_t.as_ref().ok_or(ReduceError::NoConvergence)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let variance: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2) / (n - 1) as f64).collect();
    let total: f64 = variance.iter().sum();
    let ratio: Vec<f64> = variance.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();

    let k = match cfg.components {
        Components::All => max,
        Components::Fixed(k) => k,
        Components::VarianceFraction(q) => {
            let mut acc = 0.0;
            ratio
                .iter()
                .position(|r| {
                    acc += r;
                    acc >= q
                })
                .map_or(max, |p| p + 1)
        }
    };

    let mut comps = Vec::with_capacity(k * d);
    for &i in order.iter().take(k) {
        let mut axis: Vec<f64> = v_t.row(i).iter().copied().collect();
        let pivot = axis
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, v)| if v.abs() > best.1 { (j, v.abs()) } else { best })
            .0;
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        comps.extend(axis);
    }
    Ok(PcaModel {
        mean,
        components: DenseMatrix::new(k, d, comps).map_err(|_| ReduceError::NoConvergence)?,
        explained_variance: variance[..k].to_vec(),
        explained_variance_ratio: ratio[..k].to_vec(),
    })
}

/// Projects rows onto the principal axes: `(m - mean) * components^T`.
pub fn transform_pca(m: &FeatureMatrix, model: &PcaModel) -> Result<DenseMatrix, ReduceError> {
    if m.n_cols() != model.n_features() {
        return Err(ReduceError::Shape { expected: model.n_features(), actual: m.n_cols() });
    }
    let k = model.n_components();
    // mean . axis, subtracted once per row instead of centering each row
    let offsets: Vec<f64> = model.components.rows().map(|c| RowView::Dense(c).dot(&model.mean)).collect();
    let mut out = DenseMatrix::zeros(m.n_rows(), k);
    for i in 0..m.n_rows() {
        let row = m.row(i);
        let dst = out.row_mut(i);
        match row {
            RowView::Dense(r) => {
                for (axis, o) in model.components.rows().zip(dst.iter_mut()) {
                    *o = r.iter().zip(axis).zip(&model.mean).map(|((x, a), mu)| (x - mu) * a).sum();
                }
            }
            RowView::Sparse(_) => {
                for (c, o) in dst.iter_mut().enumerate() {
                    *o = row.dot(model.components.row(c)) - offsets[c];
                }
            }
        }
    }
    Ok(out)
}

/// Maps projected rows back to feature space: `z * components + mean`.
pub fn inverse_transform_pca(z: &DenseMatrix, model: &PcaModel) -> Result<DenseMatrix, ReduceError> {
    if z.n_cols() != model.n_components() {
        return Err(ReduceError::Shape { expected: model.n_components(), actual: z.n_cols() });
    }
    let d = model.n_features();
    let mut out = DenseMatrix::zeros(z.n_rows(), d);
    for i in 0..z.n_rows() {
        let dst = out.row_mut(i);
        dst.copy_from_slice(&model.mean);
        for (c, &coef) in z.row(i).iter().enumerate() {
            RowView::Dense(model.components.row(c)).axpy(coef, dst);
        }
    }
    Ok(out)
}
