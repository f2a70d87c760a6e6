use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::labels::LabelMatrix;
use crate::matrix::{DenseMatrix, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { lambda: 1e-4, epochs: 1000 }
    }
}

/// One linear hinge-loss classifier per label, trained with Pegasos
/// stochastic sub-gradient steps. The bias is an extra always-one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    /// `heads[l]` holds `d` weights followed by the bias.
    heads: Vec<Vec<f64>>,
}

impl LinearSvm {
    pub fn fit(params: &SvmParams, x: &FeatureMatrix, y: &LabelMatrix, seed: u64) -> Result<Self, LearnError> {
        if !(params.lambda > 0.0 && params.lambda.is_finite()) {
            return Err(LearnError::InvalidParam("lambda must be positive".into()));
        }
        if params.epochs == 0 {
            return Err(LearnError::InvalidParam("epochs must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let heads = (0..y.n_labels()).map(|l| train_head(params, x, y, l, &mut rng)).collect();
        Ok(Self { heads })
    }

    pub fn margins(&self, x: &FeatureMatrix) -> DenseMatrix {
        let d = x.n_cols();
        let mut data = Vec::with_capacity(x.n_rows() * self.heads.len());
        for i in 0..x.n_rows() {
            let row = x.row(i);
            data.extend(self.heads.iter().map(|w| row.dot(&w[..d]) + w[d]));
        }
        DenseMatrix::new(x.n_rows(), self.heads.len(), data).expect("margins are finite")
    }

    /// Logistic squashing of the margins, so a score above 0.5 is a positive margin.
    pub fn predict_scores(&self, x: &FeatureMatrix) -> DenseMatrix {
        let m = self.margins(x);
        let data = m.as_slice().iter().map(|&v| sigmoid(v)).collect();
        DenseMatrix::new(m.n_rows(), m.n_cols(), data).expect("sigmoid is finite")
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn train_head(params: &SvmParams, x: &FeatureMatrix, y: &LabelMatrix, label: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = x.n_cols();
    // w = scale * v, which makes the shrink step O(1).
    let mut v = vec![0.0; d + 1];
    let mut scale = 1.0;
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (params.lambda * t as f64);
            let target = if y.get(i, label) == 1 { 1.0 } else { -1.0 };
            let row = x.row(i);
            let margin = target * scale * (row.dot(&v[..d]) + v[d]);
            let shrink = 1.0 - 1.0 / t as f64;
            if shrink == 0.0 {
                v.fill(0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * target / scale;
                row.axpy(step, &mut v[..d]);
                v[d] += step;
            }
        }
        if scale < 1e-9 {
            v.iter_mut().for_each(|w| *w *= scale);
            scale = 1.0;
        }
    }
    v.iter_mut().for_each(|w| *w *= scale);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_a_line() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64 / 10.0, 1.0 - (i % 3) as f64 / 3.0]).collect();
        let ys: Vec<[u8; 2]> = (0..20).map(|i| [(i >= 10) as u8, (i < 5) as u8]).collect();
        let x: FeatureMatrix = DenseMatrix::from_rows(&rows).unwrap().into();
        let y = LabelMatrix::from_rows(&ys).unwrap();
        let m = LinearSvm::fit(&SvmParams { lambda: 1e-3, epochs: 300 }, &x, &y, 5).unwrap();
        let s = m.predict_scores(&x);
        for (i, yr) in ys.iter().enumerate() {
            assert_eq!((s.get(i, 0) > 0.5) as u8, yr[0], "row {i}");
            assert_eq!((s.get(i, 1) > 0.5) as u8, yr[1], "row {i}");
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        let x: FeatureMatrix = DenseMatrix::from_rows(&[[1.0]]).unwrap().into();
        let y = LabelMatrix::from_rows(&[[1u8]]).unwrap();
        assert!(LinearSvm::fit(&SvmParams { lambda: 0.0, epochs: 1 }, &x, &y, 0).is_err());
        assert!(LinearSvm::fit(&SvmParams { lambda: 1.0, epochs: 0 }, &x, &y, 0).is_err());
    }
}
