//! Report files. Scores go to files that are byte-stable across runs with the
//! same seed; wall-clock numbers live in separate timing files.
//!
//! | file | content |
//! |------|---------|
//! | `report.csv` | every cell, full-precision F1 |
//! | `timings.csv` | every cell, stage timings |
//! | `table2.csv` | language × representation, reference classifier |
//! | `table3.csv` | language × classifier, reference representation |
//! | `table4.csv` | training time by PCA setting (timing) |
//! | `table5.csv` | F1 by PCA setting |
//! | `table6.csv` | confusion rates of the reference cell |
//! | `table7.csv` | train and test time, reference representation (timing) |
//! | `table8.csv` | language × representation × classifier |
//! | `ablation.csv`, `ablation_timing.csv` | per-cell PCA pairs with deltas |
//! | `report.txt` | plain-text rendering of the score tables |

use std::fmt::Write as _;
use std::path::Path;

use crate::evaluate::format_seconds;
use crate::labels::EMOTIONS;

use super::{CellRow, ExperimentConfig, ReportTable, RunError};

/// A header plus string rows, written as CSV or aligned text.
struct Grid {
    title: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Grid {
    fn new(title: impl Into<String>, header: Vec<String>) -> Self {
        Self { title: title.into(), header, rows: Vec::new() }
    }

    fn write_csv(&self, path: &Path) -> Result<(), RunError> {
        let csv_err = |e: csv::Error| RunError::Csv { path: path.to_path_buf(), message: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush().map_err(|source| RunError::Io { path: path.to_path_buf(), source })
    }

    fn render(&self, out: &mut String) {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| -> String {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            parts.join("  ").trim_end().to_string()
        };
        let _ = writeln!(out, "{}\n", self.title);
        let _ = writeln!(out, "{}", line(&self.header));
        let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        for r in &self.rows {
            let _ = writeln!(out, "{}", line(r));
        }
        out.push('\n');
    }
}

fn f4(v: Option<f64>) -> String {
    v.map_or_else(|| "error".to_string(), |v| format!("{v:.4}"))
}

fn secs(v: Option<f64>) -> String {
    v.map_or_else(|| "error".to_string(), format_seconds)
}

fn full(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn pca_word(on: bool) -> &'static str {
    if on {
        "on"
    } else {
        "off"
    }
}

/// One cell evaluated with PCA off and on.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub language: String,
    pub representation: String,
    pub classifier: String,
    pub f1_without: Option<f64>,
    pub f1_with: Option<f64>,
    pub train_without: Option<f64>,
    pub train_with: Option<f64>,
}

impl AblationRow {
    /// PCA-on minus PCA-off.
    pub fn f1_delta(&self) -> Option<f64> {
        Some(self.f1_with? - self.f1_without?)
    }

    pub fn train_delta(&self) -> Option<f64> {
        Some(self.train_with? - self.train_without?)
    }
}

/// Pairs every PCA-off row with its PCA-on counterpart.
pub fn pair_ablation(cfg: &ExperimentConfig, table: &ReportTable) -> Vec<AblationRow> {
    let mut out = Vec::new();
    for lang in &cfg.languages {
        for rep in &cfg.representations {
            for clf in &cfg.classifiers {
                let (rep, clf) = (rep.label(), clf.label());
                let off = table.get(lang, rep, clf, false);
                let on = table.get(lang, rep, clf, true);
                if off.is_none() || on.is_none() {
                    continue;
                }
                out.push(AblationRow {
                    language: lang.clone(),
                    representation: rep.to_string(),
                    classifier: clf.to_string(),
                    f1_without: off.and_then(CellRow::f1),
                    f1_with: on.and_then(CellRow::f1),
                    train_without: off.and_then(CellRow::training_seconds),
                    train_with: on.and_then(CellRow::training_seconds),
                });
            }
        }
    }
    out
}

/// Mean over languages, or `None` if any language's cell failed.
fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    let v = v?;
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn write_reports(cfg: &ExperimentConfig, table: &ReportTable) -> Result<(), RunError> {
    let out = &cfg.out_dir;
    let clfs: Vec<&str> = cfg.classifiers.iter().map(|c| c.label()).collect();
    let reps: Vec<&str> = cfg.representations.iter().map(|r| r.label()).collect();
    let (ref_clf, ref_rep, ref_pca) = (cfg.reference_classifier(), cfg.reference_representation(), cfg.reference_pca());
    let mut text = String::new();

    let mut master = Grid::new(
        "",
        ["language", "representation", "classifier", "pca", "status", "embedding_language", "f1_macro"]
            .into_iter()
            .map(String::from)
            .chain(EMOTIONS.iter().map(|e| format!("f1_{e}")))
            .chain(["error".to_string()])
            .collect(),
    );
    let mut timings = Grid::new(
        "",
        [
            "language",
            "representation",
            "classifier",
            "pca",
            "represent_seconds",
            "reduce_seconds",
            "train_seconds",
            "predict_seconds",
        ]
        .into_iter()
        .map(String::from)
        .collect(),
    );
    for r in &table.rows {
        let mut row = vec![
            r.language.clone(),
            r.representation.clone(),
            r.classifier.clone(),
            pca_word(r.pca).to_string(),
            if r.succeeded() { "ok" } else { "error" }.to_string(),
            r.embedding_language.clone().unwrap_or_default(),
            full(r.f1()),
        ];
        match &r.report {
            Some(rep) => row.extend(rep.per_label_f1.iter().map(|v| v.to_string())),
            None => row.extend(EMOTIONS.iter().map(|_| String::new())),
        }
        row.push(r.error.clone().unwrap_or_default());
        master.rows.push(row);
        let t = r.report.as_ref().map(|x| x.timing);
        timings.rows.push(vec![
            r.language.clone(),
            r.representation.clone(),
            r.classifier.clone(),
            pca_word(r.pca).to_string(),
            full(t.map(|t| t.represent_seconds)),
            full(t.map(|t| t.reduce_seconds)),
            full(t.map(|t| t.train_seconds)),
            full(t.map(|t| t.predict_seconds)),
        ]);
    }
    master.write_csv(&out.join("report.csv"))?;
    timings.write_csv(&out.join("timings.csv"))?;

    let cell = |lang: &str, rep: &str, clf: &str, pca: bool| table.get(lang, rep, clf, pca);
    let header =
        |first: &[&str], rest: &[&str]| -> Vec<String> { first.iter().chain(rest).map(|s| s.to_string()).collect() };

    let mut t2 = Grid::new(
        format!("F1-macro by representation ({ref_clf}, PCA {})", pca_word(ref_pca)),
        header(&["language"], &reps),
    );
    let mut t3 = Grid::new(
        format!("F1-macro by classifier ({ref_rep}, PCA {})", pca_word(ref_pca)),
        header(&["language"], &clfs),
    );
    let mut t8 = Grid::new(
        format!("F1-macro, all cells (PCA {})", pca_word(ref_pca)),
        header(&["language", "representation"], &clfs),
    );
    let train_test: Vec<String> = clfs.iter().flat_map(|c| [format!("{c} train"), format!("{c} test")]).collect();
    let mut t7 = Grid::new("", std::iter::once("language".to_string()).chain(train_test).collect());
    let mut t6 = Grid::new(
        format!("Confusion rates ({ref_rep}, {ref_clf}, PCA {})", pca_word(ref_pca)),
        header(&["language", "rate"], &EMOTIONS),
    );
    for lang in &cfg.languages {
        let mut row = vec![lang.clone()];
        row.extend(reps.iter().map(|rep| f4(cell(lang, rep, ref_clf, ref_pca).and_then(CellRow::f1))));
        t2.rows.push(row);

        let mut row = vec![lang.clone()];
        row.extend(clfs.iter().map(|clf| f4(cell(lang, ref_rep, clf, ref_pca).and_then(CellRow::f1))));
        t3.rows.push(row);

        for rep in &reps {
            let mut row = vec![lang.clone(), rep.to_string()];
            row.extend(clfs.iter().map(|clf| f4(cell(lang, rep, clf, ref_pca).and_then(CellRow::f1))));
            t8.rows.push(row);
        }

        let mut row = vec![lang.clone()];
        for clf in &clfs {
            let c = cell(lang, ref_rep, clf, ref_pca);
            row.push(secs(c.and_then(CellRow::training_seconds)));
            row.push(secs(c.and_then(|c| c.report.as_ref()).map(|r| r.timing.predict_seconds)));
        }
        t7.rows.push(row);

        if let Some(rep) = cell(lang, ref_rep, ref_clf, ref_pca).and_then(|c| c.report.as_ref()) {
            for (name, vals) in rep.rates.table_rows() {
                let mut row = vec![lang.clone(), name.to_string()];
                row.extend(vals);
                t6.rows.push(row);
            }
        } else {
            let mut row = vec![lang.clone(), "error".to_string()];
            row.extend(EMOTIONS.iter().map(|_| String::new()));
            t6.rows.push(row);
        }
    }
    t2.write_csv(&out.join("table2.csv"))?;
    t3.write_csv(&out.join("table3.csv"))?;
    t6.write_csv(&out.join("table6.csv"))?;
    t7.write_csv(&out.join("table7.csv"))?;
    t8.write_csv(&out.join("table8.csv"))?;
    t2.render(&mut text);
    t3.render(&mut text);
    t8.render(&mut text);
    t6.render(&mut text);

    if cfg.pca.contains(&false) && cfg.pca.contains(&true) {
        let pairs = pair_ablation(cfg, table);
        let mut t4 = Grid::new("", header(&["setting", "representation"], &clfs));
        let mut t5 = Grid::new(
            "F1-macro without and with PCA (mean over languages)",
            header(&["setting", "representation"], &clfs),
        );
        type Pick = fn(&AblationRow) -> Option<f64>;
        let settings: [(&str, Pick, Pick); 3] = [
            ("w/o PCA", |a| a.train_without, |a| a.f1_without),
            ("w/ PCA", |a| a.train_with, |a| a.f1_with),
            ("delta", AblationRow::train_delta, AblationRow::f1_delta),
        ];
        for (setting, time_of, f1_of) in settings {
            for rep in &reps {
                let mut trow = vec![setting.to_string(), rep.to_string()];
                let mut frow = trow.clone();
                for clf in &clfs {
                    let cells = || pairs.iter().filter(|a| a.representation == *rep && a.classifier == *clf);
                    trow.push(secs(mean(cells().map(time_of))));
                    frow.push(f4(mean(cells().map(f1_of))));
                }
                t4.rows.push(trow);
                t5.rows.push(frow);
            }
        }
        t4.write_csv(&out.join("table4.csv"))?;
        t5.write_csv(&out.join("table5.csv"))?;
        t5.render(&mut text);

        let long = |cols: [&str; 3]| Grid::new("", header(&["language", "representation", "classifier"], &cols));
        let mut abl = long(["f1_without_pca", "f1_with_pca", "f1_delta"]);
        let mut abl_t = long(["train_seconds_without_pca", "train_seconds_with_pca", "train_seconds_delta"]);
        for a in &pairs {
            let key = [a.language.clone(), a.representation.clone(), a.classifier.clone()];
            abl.rows
                .push(key.iter().cloned().chain([full(a.f1_without), full(a.f1_with), full(a.f1_delta())]).collect());
            abl_t.rows.push(
                key.into_iter().chain([full(a.train_without), full(a.train_with), full(a.train_delta())]).collect(),
            );
        }
        abl.write_csv(&out.join("ablation.csv"))?;
        abl_t.write_csv(&out.join("ablation_timing.csv"))?;
    }

    let failed: Vec<&CellRow> = table.failures().collect();
    let _ = writeln!(text, "{} of {} cells succeeded", table.rows.len() - failed.len(), table.rows.len());
    for r in failed {
        let _ = writeln!(text, "  {}: {}", r.id(), r.error.as_deref().unwrap_or(""));
    }
    let path = out.join("report.txt");
    std::fs::write(&path, text).map_err(|source| RunError::Io { path, source })
}
