use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{fit, ClassifierSpec, LearnError, MlpParams, ModelParams};
use crate::evaluate::f1_macro;
use crate::labels::LabelMatrix;
use crate::matrix::FeatureMatrix;

/// Candidate values per hyperparameter. Points are enumerated
/// lexicographically: the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperGrid {
    axes: Map<String, Value>,
}

impl HyperGrid {
    pub fn new() -> Self {
        Self { axes: Map::new() }
    }

    pub fn axis(mut self, name: &str, values: Vec<Value>) -> Self {
        self.axes.insert(name.to_string(), Value::Array(values));
        self
    }

    /// Hidden sizes {50, 100} × learning rates {1e-2, 1e-3} × batch sizes {16, 32}.
    pub fn default_mlp() -> Self {
        Self::new()
            .axis("hidden_layers", vec![serde_json::json!([50]), serde_json::json!([100])])
            .axis("learning_rate", vec![1e-2.into(), 1e-3.into()])
            .axis("batch_size", vec![16.into(), 32.into()])
    }

    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            return 0;
        }
        self.axes.values().map(|v| v.as_array().map_or(0, Vec::len)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every grid point applied on top of `base`, in enumeration order.
    pub fn points(&self, base: &ClassifierSpec) -> Result<Vec<ClassifierSpec>, LearnError> {
        if self.is_empty() {
            return Err(LearnError::EmptyGrid);
        }
        let axes: Vec<(&String, &Vec<Value>)> = self
            .axes
            .iter()
            .map(|(k, v)| {
                v.as_array().map(|a| (k, a)).ok_or_else(|| LearnError::Grid(format!("axis `{k}` is not a list")))
            })
            .collect::<Result<_, _>>()?;
        let base_json = serde_json::to_value(base).expect("specs serialize");
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; axes.len()];
        loop {
            let mut obj = base_json.as_object().cloned().expect("spec is an object");
            for (&(name, values), &i) in axes.iter().zip(&idx) {
                if name == "kind" || name == "seed" || !obj.contains_key(name.as_str()) {
                    return Err(LearnError::Grid(format!("`{name}` is not a {} hyperparameter", base.kind_name())));
                }
                obj.insert(name.clone(), values[i].clone());
            }
            let spec: ClassifierSpec =
                serde_json::from_value(Value::Object(obj)).map_err(|e| LearnError::Grid(e.to_string()))?;
            out.push(spec);
            // odometer increment, last axis fastest
            let mut a = axes.len();
            loop {
                if a == 0 {
                    return Ok(out);
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < axes[a].1.len() {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: ClassifierSpec,
    pub best_score: f64,
    /// Every point with its dev score, in enumeration order.
    pub scores: Vec<(ClassifierSpec, f64)>,
}

/// Scores every point with `scorer` and keeps the first maximum.
pub fn grid_search_with(
    base: &ClassifierSpec,
    grid: &HyperGrid,
    mut scorer: impl FnMut(&ClassifierSpec) -> Result<f64, LearnError>,
) -> Result<GridResult, LearnError> {
    let mut scores = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (i, spec) in grid.points(base)?.into_iter().enumerate() {
        let s = scorer(&spec)?;
        log::debug!("grid point {i}: {} -> {s:.4}", serde_json::to_string(&spec).unwrap_or_default());
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
        scores.push((spec, s));
    }
    let (i, best_score) = best.expect("grid is non-empty");
    Ok(GridResult { best: scores[i].0.clone(), best_score, scores })
}

/// Fits each point on `train` and scores F1-macro on `dev`.
pub fn grid_search(
    base: &ClassifierSpec,
    grid: &HyperGrid,
    train: (&FeatureMatrix, &LabelMatrix),
    dev: (&FeatureMatrix, &LabelMatrix),
) -> Result<GridResult, LearnError> {
    grid_search_with(base, grid, |spec| {
        let model = fit(spec, train.0, train.1)?;
        Ok(f1_macro(dev.1, &model.predict(dev.0)?.labels)?)
    })
}

pub fn grid_search_mlp(
    grid: &HyperGrid,
    train: (&FeatureMatrix, &LabelMatrix),
    dev: (&FeatureMatrix, &LabelMatrix),
    seed: u64,
) -> Result<GridResult, LearnError> {
    let base = ClassifierSpec::new(ModelParams::Mlp(MlpParams::default())).with_seed(seed);
    grid_search(&base, grid, train, dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn default_grid_enumeration_order() {
        let pts = HyperGrid::default_mlp().points(&ClassifierSpec::mlp()).unwrap();
        assert_eq!(pts.len(), 8);
        let key = |s: &ClassifierSpec| match &s.params {
            ModelParams::Mlp(p) => (p.hidden_layers[0], p.learning_rate, p.batch_size),
            _ => unreachable!(),
        };
        assert_eq!(key(&pts[0]), (50, 1e-2, 16));
        assert_eq!(key(&pts[1]), (50, 1e-2, 32));
        assert_eq!(key(&pts[2]), (50, 1e-3, 16));
        assert_eq!(key(&pts[7]), (100, 1e-3, 32));
    }

    #[test]
    fn unknown_and_invalid_axes() {
        let base = ClassifierSpec::mlp();
        let g = HyperGrid::new().axis("k", vec![json!(3)]);
        assert!(matches!(g.points(&base), Err(LearnError::Grid(_))));
        let g = HyperGrid::new().axis("batch_size", vec![json!("big")]);
        assert!(matches!(g.points(&base), Err(LearnError::Grid(_))));
        assert!(matches!(HyperGrid::new().points(&base), Err(LearnError::EmptyGrid)));
        let g = HyperGrid::new().axis("batch_size", vec![]);
        assert!(matches!(g.points(&base), Err(LearnError::EmptyGrid)));
    }

    #[test]
    fn stub_scorer_argmax_and_ties() {
        let g = HyperGrid::new().axis("k", vec![json!(1), json!(2), json!(3)]);
        let base = ClassifierSpec::knn(5);
        let k_of = |s: &ClassifierSpec| match &s.params {
            ModelParams::Knn(p) => p.k,
            _ => unreachable!(),
        };
        let r = grid_search_with(&base, &g, |s| Ok([0.7, 0.6, 0.7][k_of(s) - 1])).unwrap();
        assert_eq!(k_of(&r.best), 1);
        assert_eq!(r.best_score, 0.7);
        assert_eq!(r.scores.len(), 3);
    }

    #[test]
    fn singleton_grid() {
        let g = HyperGrid::new().axis("k", vec![json!(4)]);
        let r = grid_search_with(&ClassifierSpec::knn(5), &g, |_| Ok(0.1)).unwrap();
        assert_eq!(r.best, ClassifierSpec::knn(4));
    }
}
