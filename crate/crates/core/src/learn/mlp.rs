//! Feed-forward network with ReLU hidden layers and one sigmoid output per
//! label, trained by mini-batch gradient descent with momentum.
//!
//! The loss of a sample is the binary cross-entropy summed over labels; a
//! batch loss is the mean over its samples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::svm::sigmoid;
use super::LearnError;
use crate::labels::LabelMatrix;
use crate::matrix::{DenseMatrix, FeatureMatrix, RowView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden_layers: vec![100], learning_rate: 1e-3, momentum: 0.9, epochs: 200, batch_size: 32 }
    }
}

impl MlpParams {
    fn validate(&self) -> Result<(), LearnError> {
        if self.hidden_layers.contains(&0) {
            return Err(LearnError::InvalidParam("hidden layer sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LearnError::InvalidParam("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(LearnError::InvalidParam("momentum must lie in [0, 1)".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(LearnError::InvalidParam("epochs and batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// All weights and biases live in one flat vector. Layer `l` maps
/// `sizes[l]` inputs to `sizes[l + 1]` outputs; its weight block is stored
/// input-major (`w[c * out + h]`) and followed by `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights and biases.
    pub fn init(hidden: &[usize], n_inputs: usize, n_outputs: usize, rng: &mut impl Rng) -> Self {
        let mut sizes = vec![n_inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(n_outputs);
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            params.extend((0..(w[0] + 1) * w[1]).map(|_| rng.gen_range(-bound..bound)));
        }
        Self { sizes, params }
    }

    pub fn zeros(hidden: &[usize], n_inputs: usize, n_outputs: usize) -> Self {
        let mut m = Self::init(hidden, n_inputs, n_outputs, &mut ChaCha8Rng::seed_from_u64(0));
        m.params.fill(0.0);
        m
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// (weight offset, bias offset, inputs, outputs) for layer `l`.
    fn layout(&self, l: usize) -> (usize, usize, usize, usize) {
        let mut off = 0;
        for w in self.sizes.windows(2).take(l) {
            off += (w[0] + 1) * w[1];
        }
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        (off, off + i * o, i, o)
    }

    /// Pre-activations of every layer for one input row.
    fn forward(&self, row: RowView<'_>) -> Vec<Vec<f64>> {
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let (w, b, n_in, n_out) = self.layout(l);
            let mut z = self.params[b..b + n_out].to_vec();
            let weights = &self.params[w..w + n_in * n_out];
            let mut add = |c: usize, v: f64| {
                for (zh, wh) in z.iter_mut().zip(&weights[c * n_out..(c + 1) * n_out]) {
                    *zh += v * wh;
                }
            };
            if l == 0 {
                row.for_each_nonzero(&mut add);
            } else {
                zs[l - 1].iter().enumerate().filter(|(_, v)| **v > 0.0).for_each(|(c, &v)| add(c, v));
            }
            zs.push(z);
        }
        zs
    }

    /// Adds the gradient of the mean batch loss over `rows` into `grad` and
    /// returns that loss.
    fn accumulate(&self, x: &FeatureMatrix, y: &LabelMatrix, rows: &[usize], grad: &mut [f64]) -> f64 {
        let scale = 1.0 / rows.len() as f64;
        let mut loss = 0.0;
        let last = self.n_layers() - 1;
        for &r in rows {
            let input = x.row(r);
            let zs = self.forward(input);
            let mut delta: Vec<f64> = zs[last]
                .iter()
                .zip(y.row(r))
                .map(|(&z, &t)| {
                    let t = t as f64;
                    loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z;
                    (sigmoid(z) - t) * scale
                })
                .collect();
            for l in (0..=last).rev() {
                let (w, b, n_in, n_out) = self.layout(l);
                for (g, d) in grad[b..b + n_out].iter_mut().zip(&delta) {
                    *g += d;
                }
                let mut add_outer = |c: usize, v: f64| {
                    for (g, d) in grad[w + c * n_out..w + (c + 1) * n_out].iter_mut().zip(&delta) {
                        *g += v * d;
                    }
                };
                if l == 0 {
                    input.for_each_nonzero(&mut add_outer);
                    break;
                }
                let prev = &zs[l - 1];
                prev.iter().enumerate().filter(|(_, v)| **v > 0.0).for_each(|(c, &v)| add_outer(c, v));
                let weights = &self.params[w..w + n_in * n_out];
                delta = (0..n_in)
                    .map(|c| {
                        if prev[c] > 0.0 {
                            weights[c * n_out..(c + 1) * n_out].iter().zip(&delta).map(|(a, b)| a * b).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
        loss * scale
    }

    /// Mean over `rows` of the per-sample loss summed across labels.
    pub fn loss(&self, x: &FeatureMatrix, y: &LabelMatrix, rows: &[usize]) -> f64 {
        let last = self.n_layers() - 1;
        let mut loss = 0.0;
        for &r in rows {
            let zs = self.forward(x.row(r));
            for (&z, &t) in zs[last].iter().zip(y.row(r)) {
                loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - t as f64 * z;
            }
        }
        loss / rows.len() as f64
    }

    pub fn gradient(&self, x: &FeatureMatrix, y: &LabelMatrix, rows: &[usize]) -> Vec<f64> {
        let mut g = vec![0.0; self.params.len()];
        self.accumulate(x, y, rows, &mut g);
        g
    }

    pub fn fit(params: &MlpParams, x: &FeatureMatrix, y: &LabelMatrix, seed: u64) -> Result<Self, LearnError> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::init(&params.hidden_layers, x.n_cols(), y.n_labels(), &mut rng);
        let mut velocity = vec![0.0; net.params.len()];
        let mut grad = vec![0.0; net.params.len()];
        let mut order: Vec<usize> = (0..x.n_rows()).collect();
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch_size) {
                grad.fill(0.0);
                net.accumulate(x, y, batch, &mut grad);
                for ((p, v), g) in net.params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                    *v = params.momentum * *v - params.learning_rate * g;
                    *p += *v;
                }
            }
        }
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(LearnError::InvalidParam("training diverged; lower the learning rate".into()));
        }
        Ok(net)
    }

    pub fn predict_scores(&self, x: &FeatureMatrix) -> DenseMatrix {
        let last = self.n_layers() - 1;
        let n_out = self.sizes[last + 1];
        let mut data = Vec::with_capacity(x.n_rows() * n_out);
        for i in 0..x.n_rows() {
            data.extend(self.forward(x.row(i))[last].iter().map(|&z| sigmoid(z)));
        }
        DenseMatrix::new(x.n_rows(), n_out, data).expect("sigmoid outputs are finite")
    }
}

/// Largest relative error between the analytic gradient of `net` on all
/// rows and central finite differences with step `epsilon`.
///
/// Relative error is `|a - n| / max(|a| + |n|, 1e-7)`, so entries where both
/// gradients are essentially zero compare on an absolute scale.
pub fn gradient_check_network(net: &Mlp, x: &FeatureMatrix, y: &LabelMatrix, epsilon: f64) -> f64 {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let analytic = net.gradient(x, y, &rows);
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let orig = probe.params[k];
        probe.params[k] = orig + epsilon;
        let up = probe.loss(x, y, &rows);
        probe.params[k] = orig - epsilon;
        let down = probe.loss(x, y, &rows);
        probe.params[k] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-7);
        worst = worst.max(rel);
    }
    worst
}

/// Gradient check of a freshly initialised network for an mlp spec.
pub fn gradient_check(
    params: &MlpParams,
    seed: u64,
    x: &FeatureMatrix,
    y: &LabelMatrix,
    epsilon: f64,
) -> Result<f64, LearnError> {
    params.validate()?;
    if x.n_rows() != y.n_rows() {
        return Err(LearnError::RowMismatch { x_rows: x.n_rows(), y_rows: y.n_rows() });
    }
    let net = Mlp::init(&params.hidden_layers, x.n_cols(), y.n_labels(), &mut ChaCha8Rng::seed_from_u64(seed));
    Ok(gradient_check_network(&net, x, y, epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SparseMatrix;

    fn random_problem(seed: u64) -> (FeatureMatrix, LabelMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<[f64; 3]> =
            (0..4).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let ys: Vec<[u8; 6]> = (0..4).map(|_| std::array::from_fn(|_| rng.gen_range(0..2u8))).collect();
        (DenseMatrix::from_rows(&rows).unwrap().into(), LabelMatrix::from_rows(&ys).unwrap())
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = MlpParams { hidden_layers: vec![5], ..Default::default() };
        for seed in [1, 2] {
            let (x, y) = random_problem(seed);
            let err = gradient_check(&p, seed, &x, &y, 1e-5).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn two_hidden_layers_and_sparse_input() {
        let p = MlpParams { hidden_layers: vec![4, 3], ..Default::default() };
        let x = SparseMatrix::new(5, vec![vec![(0, 0.5), (3, -1.0)], vec![(2, 2.0)], vec![], vec![(4, 0.3)]]).unwrap();
        let y = LabelMatrix::from_rows(&[[1u8, 0], [0, 1], [1, 1], [0, 0]]).unwrap();
        assert!(gradient_check(&p, 7, &x.into(), &y, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn zero_network_on_zero_input() {
        let x: FeatureMatrix = DenseMatrix::zeros(3, 3).into();
        let y = LabelMatrix::from_rows(&[[1u8, 0, 1, 0, 1, 0], [0; 6], [1; 6]]).unwrap();
        let net = Mlp::zeros(&[5], 3, 6);
        let g = net.gradient(&x, &y, &[0, 1, 2]);
        let (w, b, n_in, n_out) = net.layout(0);
        assert!(g[w..w + n_in * n_out].iter().all(|&v| v == 0.0));
        assert!(g[b..b + n_out].iter().all(|&v| v == 0.0));
        assert!(gradient_check_network(&net, &x, &y, 1e-5) < 1e-4);
    }

    #[test]
    fn loss_at_zero_is_ln2_per_label() {
        let x: FeatureMatrix = DenseMatrix::zeros(2, 3).into();
        let y = LabelMatrix::from_rows(&[[1u8, 0], [0, 1]]).unwrap();
        let net = Mlp::zeros(&[4], 3, 2);
        assert!((net.loss(&x, &y, &[0, 1]) - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn training_reduces_loss() {
        let rows: Vec<[f64; 2]> = (0..32).map(|i| [(i % 4) as f64 / 3.0, (i / 4) as f64 / 7.0]).collect();
        let ys: Vec<[u8; 2]> = rows.iter().map(|r| [(r[0] > 0.5) as u8, (r[1] > 0.5) as u8]).collect();
        let x: FeatureMatrix = DenseMatrix::from_rows(&rows).unwrap().into();
        let y = LabelMatrix::from_rows(&ys).unwrap();
        let all: Vec<usize> = (0..32).collect();
        let p = MlpParams { hidden_layers: vec![8], learning_rate: 0.05, epochs: 300, batch_size: 8, momentum: 0.9 };
        let start = Mlp::init(&p.hidden_layers, 2, 2, &mut ChaCha8Rng::seed_from_u64(3)).loss(&x, &y, &all);
        let net = Mlp::fit(&p, &x, &y, 3).unwrap();
        assert!(net.loss(&x, &y, &all) < start / 4.0);
    }

    #[test]
    fn rejects_bad_params() {
        let x: FeatureMatrix = DenseMatrix::zeros(1, 1).into();
        let y = LabelMatrix::zeros(1, 1);
        for p in [
            MlpParams { hidden_layers: vec![0], ..Default::default() },
            MlpParams { learning_rate: -1.0, ..Default::default() },
            MlpParams { momentum: 1.0, ..Default::default() },
            MlpParams { batch_size: 0, ..Default::default() },
        ] {
            assert!(Mlp::fit(&p, &x, &y, 0).is_err());
        }
    }
}
