//! CART tree over all label columns at once.
//!
//! Node impurity is the sum over labels of the binary Gini index, so one tree
//! predicts the whole label vector. Row weights let the forest grow trees on
//! bootstrap samples without copying the data.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::labels::LabelMatrix;
use crate::matrix::{DenseMatrix, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_split: 2 }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self) -> Result<(), LearnError> {
        if self.min_samples_split < 2 {
            return Err(LearnError::InvalidParam("min_samples_split must be at least 2".into()));
        }
        if self.max_depth == Some(0) {
            return Err(LearnError::InvalidParam("max_depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Weighted fraction of positive samples per label.
    Leaf(Vec<f64>),
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_labels: usize,
}

impl DecisionTree {
    pub fn fit(params: &TreeParams, x: &FeatureMatrix, y: &LabelMatrix) -> Result<Self, LearnError> {
        params.validate()?;
        let weights = vec![1u32; x.n_rows()];
        let columns = x.nonzero_columns();
        Ok(grow(params, x, &columns, y, &weights, None))
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Leaf fractions for one row.
    pub(crate) fn leaf_for(&self, row: crate::matrix::RowView<'_>) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(p) => return p,
                Node::Split { feature, threshold, left, right } => {
                    i = if row.get(*feature) <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_scores(&self, x: &FeatureMatrix) -> DenseMatrix {
        let mut data = Vec::with_capacity(x.n_rows() * self.n_labels);
        for i in 0..x.n_rows() {
            data.extend_from_slice(self.leaf_for(x.row(i)));
        }
        DenseMatrix::new(x.n_rows(), self.n_labels, data).expect("fractions are finite")
    }
}

/// Per-feature random subsampling state used by the forest.
pub(crate) struct FeatureSampler<'r> {
    pub max_features: usize,
    pub rng: &'r mut ChaCha8Rng,
}

pub(crate) fn grow(
    params: &TreeParams,
    x: &FeatureMatrix,
    columns: &[Vec<(usize, f64)>],
    y: &LabelMatrix,
    weights: &[u32],
    sampler: Option<FeatureSampler<'_>>,
) -> DecisionTree {
    let rows: Vec<usize> = (0..x.n_rows()).filter(|&r| weights[r] > 0).collect();
    let mut b = Builder {
        params,
        x,
        columns,
        y,
        weights,
        sampler,
        features: (0..x.n_cols()).collect(),
        in_node: vec![false; x.n_rows()],
        nodes: Vec::new(),
    };
    b.build(rows, 0);
    DecisionTree { nodes: b.nodes, n_labels: y.n_labels() }
}

struct Builder<'a, 'r> {
    params: &'a TreeParams,
    x: &'a FeatureMatrix,
    columns: &'a [Vec<(usize, f64)>],
    y: &'a LabelMatrix,
    weights: &'a [u32],
    sampler: Option<FeatureSampler<'r>>,
    features: Vec<usize>,
    in_node: Vec<bool>,
    nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// `Σ_l 2 p_l (1 - p_l)` scaled by the node weight.
fn weighted_gini(total: f64, pos: &[f64]) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    pos.iter().map(|&p| 2.0 * p * (total - p) / total).sum()
}

impl Builder<'_, '_> {
    fn label_sums(&self, rows: &[usize]) -> (f64, Vec<f64>) {
        let mut pos = vec![0.0; self.y.n_labels()];
        let mut total = 0.0;
        for &r in rows {
            let w = self.weights[r] as f64;
            total += w;
            for (p, &b) in pos.iter_mut().zip(self.y.row(r)) {
                *p += w * b as f64;
            }
        }
        (total, pos)
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let (total, pos) = self.label_sums(&rows);
        let id = self.nodes.len();
        let leaf = Node::Leaf(pos.iter().map(|p| p / total).collect());
        self.nodes.push(leaf);

        let pure = pos.iter().all(|&p| p == 0.0 || p == total);
        let too_small = total < self.params.min_samples_split as f64;
        let too_deep = self.params.max_depth.is_some_and(|m| depth >= m);
        if pure || too_small || too_deep {
            return id;
        }
        let Some(split) = self.best_split(&rows, total, &pos) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x.row(r).get(split.feature) <= split.threshold);
        drop(rows);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }

    fn best_split(&mut self, rows: &[usize], total: f64, pos: &[f64]) -> Option<Split> {
        for &r in rows {
            self.in_node[r] = true;
        }
        let mut best: Option<Split> = None;
        let n_features = self.features.len();
        let mut informative = 0;
        let mut t = 0;
        while t < n_features {
            if let Some(s) = &mut self.sampler {
                if informative >= s.max_features && best.is_some() {
                    break;
                }
                let j = s.rng.gen_range(t..n_features);
                self.features.swap(t, j);
            }
            let feature = self.features[t];
            t += 1;
            if let Some(cand) = self.evaluate_feature(feature, rows, total, pos) {
                informative += 1;
                let better = match &best {
                    None => true,
                    Some(b) => {
                        cand.score < b.score
                            || (cand.score == b.score && (cand.feature, cand.threshold) < (b.feature, b.threshold))
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        for &r in rows {
            self.in_node[r] = false;
        }
        best
    }

    /// Best threshold on one feature, or `None` when the feature is constant
    /// within the node.
    fn evaluate_feature(&self, feature: usize, rows: &[usize], total: f64, pos: &[f64]) -> Option<Split> {
        let n_labels = pos.len();
        // (value, row) for nonzero entries in the node
        let mut entries: Vec<(f64, usize)> = Vec::new();
        let column = &self.columns[feature];
        if rows.len() < column.len() {
            for &r in rows {
                let v = self.x.row(r).get(feature);
                if v != 0.0 {
                    entries.push((v, r));
                }
            }
        } else {
            entries.extend(column.iter().filter(|(r, _)| self.in_node[*r]).map(|&(r, v)| (v, r)));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut zero_weight = total;
        let mut zero_pos = pos.to_vec();
        for &(_, r) in &entries {
            let w = self.weights[r] as f64;
            zero_weight -= w;
            for (z, &b) in zero_pos.iter_mut().zip(self.y.row(r)) {
                *z -= w * b as f64;
            }
        }
        let has_zero = entries.len() < rows.len();

        // Sweep groups in ascending value order, with the implicit zero group
        // placed between negative and positive entries.
        let split_at = entries.partition_point(|e| e.0 < 0.0);
        let mut left_w = 0.0;
        let mut left_pos = vec![0.0; n_labels];
        let mut best: Option<(f64, f64)> = None;
        let mut prev: Option<f64> = None;

        let consider = |prev: Option<f64>, next: f64, left_w: f64, left_pos: &[f64], best: &mut Option<(f64, f64)>| {
            let Some(a) = prev else { return };
            if a == next {
                return;
            }
            let right_w = total - left_w;
            if left_w <= 0.0 || right_w <= 0.0 {
                return;
            }
            let right_pos: Vec<f64> = pos.iter().zip(left_pos).map(|(p, l)| p - l).collect();
            let score = weighted_gini(left_w, left_pos) + weighted_gini(right_w, &right_pos);
            let mut threshold = a + (next - a) / 2.0;
            if threshold >= next || !threshold.is_finite() {
                threshold = a;
            }
            if best.is_none_or(|(s, _)| score < s) {
                *best = Some((score, threshold));
            }
        };

        let add_entry = |r: usize, left_w: &mut f64, left_pos: &mut [f64]| {
            let w = self.weights[r] as f64;
            *left_w += w;
            for (l, &b) in left_pos.iter_mut().zip(self.y.row(r)) {
                *l += w * b as f64;
            }
        };

        for (k, &(v, r)) in entries.iter().enumerate() {
            if k == split_at && has_zero {
                consider(prev, 0.0, left_w, &left_pos, &mut best);
                left_w += zero_weight;
                for (l, z) in left_pos.iter_mut().zip(&zero_pos) {
                    *l += z;
                }
                prev = Some(0.0);
            }
            consider(prev, v, left_w, &left_pos, &mut best);
            add_entry(r, &mut left_w, &mut left_pos);
            prev = Some(v);
        }
        if split_at == entries.len() && has_zero {
            consider(prev, 0.0, left_w, &left_pos, &mut best);
        }
        best.map(|(score, threshold)| Split { feature, threshold, score })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SparseMatrix;
    use proptest::prelude::*;

    fn labels(bits: &[u8]) -> LabelMatrix {
        let rows: Vec<[u8; 1]> = bits.iter().map(|&b| [b]).collect();
        LabelMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn memorizes_xor() {
        let x: FeatureMatrix =
            DenseMatrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap().into();
        let y = labels(&[0, 1, 1, 0]);
        let t = DecisionTree::fit(&TreeParams::default(), &x, &y).unwrap();
        assert_eq!(t.predict_scores(&x).as_slice(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn single_split_threshold_is_midpoint() {
        let x: FeatureMatrix = DenseMatrix::from_rows(&[[1.0], [2.0], [5.0], [6.0]]).unwrap().into();
        let t = DecisionTree::fit(&TreeParams::default(), &x, &labels(&[0, 0, 1, 1])).unwrap();
        assert_eq!(t.n_nodes(), 3);
        assert_eq!(t.nodes[0], Node::Split { feature: 0, threshold: 3.5, left: 1, right: 2 });
    }

    #[test]
    fn negative_values_and_implicit_zeros() {
        let x = SparseMatrix::new(1, vec![vec![(0, -2.0)], vec![], vec![(0, 3.0)], vec![]]).unwrap();
        let y = labels(&[1, 0, 1, 0]);
        let t = DecisionTree::fit(&TreeParams::default(), &x.into(), &y).unwrap();
        let q: FeatureMatrix = DenseMatrix::from_rows(&[[-2.0], [0.0], [3.0], [-0.5]]).unwrap().into();
        assert_eq!(t.predict_scores(&q).as_slice(), &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn depth_limit_and_fractions() {
        let x: FeatureMatrix = DenseMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap().into();
        let p = TreeParams { max_depth: Some(1), ..Default::default() };
        let t = DecisionTree::fit(&p, &x, &labels(&[0, 1, 0, 1])).unwrap();
        assert_eq!(t.depth(), 1);
        let s = t.predict_scores(&x);
        assert!(s.as_slice().iter().all(|v| [0.0, 0.5, 1.0 / 3.0, 2.0 / 3.0, 1.0].contains(v)));
    }

    #[test]
    fn constant_features_make_a_leaf() {
        let x: FeatureMatrix = DenseMatrix::from_rows(&[[1.0], [1.0]]).unwrap().into();
        let t = DecisionTree::fit(&TreeParams::default(), &x, &labels(&[0, 1])).unwrap();
        assert_eq!(t.n_nodes(), 1);
        assert_eq!(t.predict_scores(&x).as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_params() {
        let x: FeatureMatrix = DenseMatrix::from_rows(&[[1.0]]).unwrap().into();
        let p = TreeParams { min_samples_split: 1, ..Default::default() };
        assert!(DecisionTree::fit(&p, &x, &labels(&[0])).is_err());
    }

    proptest! {
        #[test]
        fn unlimited_tree_fits_distinct_rows(
            pts in proptest::collection::btree_map((-20i32..20, -20i32..20), proptest::array::uniform3(0u8..2), 1..25)
        ) {
            let rows: Vec<[f64; 2]> = pts.keys().map(|&(a, b)| [a as f64, b as f64]).collect();
            let ys: Vec<[u8; 3]> = pts.values().copied().collect();
            let x: FeatureMatrix = DenseMatrix::from_rows(&rows).unwrap().into();
            let y = LabelMatrix::from_rows(&ys).unwrap();
            let t = DecisionTree::fit(&TreeParams::default(), &x, &y).unwrap();
            let s = t.predict_scores(&x);
            for (i, yr) in ys.iter().enumerate() {
                for (l, &v) in yr.iter().enumerate() {
                    prop_assert_eq!(s.get(i, l), v as f64);
                }
            }
        }

        #[test]
        fn sparse_and_dense_agree(
            cells in proptest::collection::vec(proptest::array::uniform3(prop_oneof![Just(0.0), -3.0f64..3.0]), 2..20),
            bits in proptest::collection::vec(0u8..2, 20),
        ) {
            let dense = DenseMatrix::from_rows(&cells).unwrap();
            let sparse = SparseMatrix::new(3, cells.iter().map(|r| {
                r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| (j, v)).collect()
            }).collect()).unwrap();
            let y = labels(&bits[..cells.len()]);
            let a = DecisionTree::fit(&TreeParams::default(), &dense.into(), &y).unwrap();
            let b = DecisionTree::fit(&TreeParams::default(), &sparse.into(), &y).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
