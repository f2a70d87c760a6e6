//! Scores, confusion rates and wall-clock timing.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::labels::{LabelMatrix, EMOTIONS};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold is {gold_rows} x {gold_cols} but predictions are {pred_rows} x {pred_cols}")]
    Shape { gold_rows: usize, gold_cols: usize, pred_rows: usize, pred_cols: usize },
}

fn check_shapes(gold: &LabelMatrix, pred: &LabelMatrix) -> Result<(), EvalError> {
    if gold.n_rows() != pred.n_rows() || gold.n_labels() != pred.n_labels() {
        return Err(EvalError::Shape {
            gold_rows: gold.n_rows(),
            gold_cols: gold.n_labels(),
            pred_rows: pred.n_rows(),
            pred_cols: pred.n_labels(),
        });
    }
    Ok(())
}

/// Raw confusion counts for one label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    /// `2PR / (P + R)`, which equals `2TP / (2TP + FP + FN)`; zero when undefined.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 || self.tp == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

pub fn label_counts(gold: &LabelMatrix, pred: &LabelMatrix) -> Result<Vec<Counts>, EvalError> {
    check_shapes(gold, pred)?;
    let mut counts = vec![Counts::default(); gold.n_labels()];
    for (g, p) in gold.rows().zip(pred.rows()) {
        for (c, (&gv, &pv)) in counts.iter_mut().zip(g.iter().zip(p)) {
            match (gv, pv) {
                (1, 1) => c.tp += 1,
                (0, 0) => c.tn += 1,
                (0, _) => c.fp += 1,
                _ => c.fn_ += 1,
            }
        }
    }
    Ok(counts)
}

pub fn per_label_f1(gold: &LabelMatrix, pred: &LabelMatrix) -> Result<Vec<f64>, EvalError> {
    Ok(label_counts(gold, pred)?.iter().map(Counts::f1).collect())
}

/// Unweighted mean of per-label F1. A label with no true positives scores 0.
pub fn f1_macro(gold: &LabelMatrix, pred: &LabelMatrix) -> Result<f64, EvalError> {
    let f1 = per_label_f1(gold, pred)?;
    if f1.is_empty() {
        return Ok(0.0);
    }
    Ok(f1.iter().sum::<f64>() / f1.len() as f64)
}

/// Per-label rates; `None` where the denominator is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelRates {
    pub tp_rate: Option<f64>,
    pub tn_rate: Option<f64>,
    pub fp_rate: Option<f64>,
    pub fn_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRates {
    pub labels: Vec<LabelRates>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn confusion_rates(gold: &LabelMatrix, pred: &LabelMatrix) -> Result<ConfusionRates, EvalError> {
    let labels = label_counts(gold, pred)?
        .iter()
        .map(|c| LabelRates {
            tp_rate: ratio(c.tp, c.tp + c.fn_),
            fn_rate: ratio(c.fn_, c.tp + c.fn_),
            tn_rate: ratio(c.tn, c.tn + c.fp),
            fp_rate: ratio(c.fp, c.tn + c.fp),
        })
        .collect();
    Ok(ConfusionRates { labels })
}

pub fn format_rate(r: Option<f64>) -> String {
    match r {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

impl ConfusionRates {
    /// Rows TP/TN/FP/FN, one column per emotion, four decimals.
    pub fn table_rows(&self) -> Vec<(&'static str, Vec<String>)> {
        type Pick = fn(&LabelRates) -> Option<f64>;
        let pick: [(&str, Pick); 4] =
            [("TP", |r| r.tp_rate), ("TN", |r| r.tn_rate), ("FP", |r| r.fp_rate), ("FN", |r| r.fn_rate)];
        pick.iter().map(|(name, f)| (*name, self.labels.iter().map(|r| format_rate(f(r))).collect())).collect()
    }

    /// Aligned plain-text table in the per-label confusion layout.
    pub fn render(&self) -> String {
        let names: Vec<String> = if self.labels.len() == EMOTIONS.len() {
            EMOTIONS.iter().map(|s| s.to_string()).collect()
        } else {
            (0..self.labels.len()).map(|i| format!("label{i}")).collect()
        };
        let width = names.iter().map(String::len).max().unwrap_or(0).max(6);
        let mut out = format!("{:<4}", "");
        for n in &names {
            let _ = write!(out, " {n:>width$}");
        }
        out.push('\n');
        for (row, cells) in self.table_rows() {
            let _ = write!(out, "{row:<4}");
            for c in cells {
                let _ = write!(out, " {c:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

/// Wall-clock seconds for the representation, reduction, training and prediction stages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub represent_seconds: f64,
    pub reduce_seconds: f64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

/// Runs `action` and returns its result with the elapsed monotonic-clock time in seconds.
pub fn time_run<T>(action: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = action();
    (out, start.elapsed().as_secs_f64())
}

/// Four decimals like the published timing tables, switching to scientific
/// notation below 1e-3 so short durations never print as zero.
pub fn format_seconds(s: f64) -> String {
    if s == 0.0 || s.abs() >= 1e-3 {
        format!("{s:.4}")
    } else {
        format!("{s:.3e}")
    }
}

/// Scores for one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub language: String,
    pub representation: String,
    pub classifier: String,
    pub pca: bool,
    pub f1_macro: f64,
    pub per_label_f1: Vec<f64>,
    pub rates: ConfusionRates,
    pub timing: TimingRecord,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[u8]]) -> LabelMatrix {
        LabelMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let g = m(&[&[1, 0, 1], &[0, 1, 1]]);
        assert_eq!(f1_macro(&g, &g).unwrap(), 1.0);
    }

    #[test]
    fn hand_worked_macro() {
        let g = m(&[&[1, 1], &[0, 1]]);
        let p = m(&[&[1, 1], &[0, 0]]);
        assert_eq!(per_label_f1(&g, &p).unwrap(), vec![1.0, 2.0 / 3.0]);
        assert!((f1_macro(&g, &p).unwrap() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn zero_division_scores_zero() {
        let g = m(&[&[0], &[0]]);
        assert_eq!(f1_macro(&g, &g).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        assert!(f1_macro(&m(&[&[1, 0]]), &m(&[&[1]])).is_err());
        assert!(confusion_rates(&m(&[&[1]]), &m(&[&[1], &[0]])).is_err());
    }

    #[test]
    fn rates_by_hand() {
        let g = m(&[&[1], &[1], &[1], &[0], &[0]]);
        let p = m(&[&[1], &[0], &[1], &[0], &[1]]);
        let r = confusion_rates(&g, &p).unwrap().labels[0];
        assert_eq!(r.tp_rate, Some(2.0 / 3.0));
        assert_eq!(r.fn_rate, Some(1.0 / 3.0));
        assert_eq!(r.tn_rate, Some(0.5));
        assert_eq!(r.fp_rate, Some(0.5));
    }

    #[test]
    fn undefined_rates_print_na() {
        let g = m(&[&[0, 1], &[0, 1]]);
        let r = confusion_rates(&g, &g).unwrap();
        assert_eq!(r.labels[0].tp_rate, None);
        assert_eq!(r.labels[1].tn_rate, None);
        assert_eq!(r.labels[1].tp_rate, Some(1.0));
        assert_eq!(r.table_rows()[0].1, ["n/a", "1.0000"]);
    }

    #[test]
    fn timing() {
        let ((), t) = time_run(|| ());
        assert!((0.0..0.01).contains(&t));
        let ((), t) = time_run(|| std::thread::sleep(std::time::Duration::from_millis(50)));
        assert!((0.045..=0.5).contains(&t), "{t}");
        assert_eq!(format_seconds(1.48944), "1.4894");
        assert_eq!(format_seconds(0.0006), "6.000e-4");
        assert_eq!(format_seconds(0.0), "0.0000");
    }

    proptest! {
        #[test]
        fn row_permutation_invariance(
            rows in proptest::collection::vec((proptest::array::uniform6(0u8..2), proptest::array::uniform6(0u8..2)), 1..30),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let gold: Vec<[u8; 6]> = rows.iter().map(|r| r.0).collect();
            let pred: Vec<[u8; 6]> = rows.iter().map(|r| r.1).collect();
            let mut perm: Vec<usize> = (0..rows.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (g, p) = (LabelMatrix::from_rows(&gold).unwrap(), LabelMatrix::from_rows(&pred).unwrap());
            let a = f1_macro(&g, &p).unwrap();
            let b = f1_macro(&g.select_rows(&perm), &p.select_rows(&perm)).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
