//! Experiment matrix execution: every language × representation × PCA
//! setting × classifier cell is trained, scored and timed, and the results
//! are written as a master report plus per-view tables.
//!
//! Cells sharing a language and representation share the fitted
//! representation. Cells run in a thread pool sized by `workers`; with more
//! than one worker, wall-clock timings are distorted by contention.

mod config;
mod pipeline;
mod report;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    fill, ClassifierEntry, EvalSplit, ExperimentConfig, ReferenceCells, RepresentationSpec, LANG_PLACEHOLDER,
    SPLIT_PLACEHOLDER,
};
pub use pipeline::{
    predict_file, read_predictions, write_predictions, FittedReduction, FittedRepresentation, PipelineModel,
    PIPELINE_KIND,
};
pub use report::{pair_ablation, write_reports, AblationRow};

use crate::corpus::{load_split_as, CorpusError, DatasetSplit, SplitRole};
use crate::dense_features::{EmbeddingError, FallbackError, LanguageResolver};
use crate::evaluate::{confusion_rates, f1_macro, per_label_f1, time_run, EvalError, EvalReport, TimingRecord};
use crate::labels::LabelMatrix;
use crate::learn::{derive_seed, fit, grid_search_with, ClassifierSpec, FittedClassifier, LearnError};
use crate::matrix::FeatureMatrix;
use crate::persist::PersistError;
use crate::reduce::{fit_pca, normalize_rows, ReduceError};
use crate::sparse_features::{fit_bow, fit_tfidf, FeatureError};
use crate::tokenize::{TokenizeError, Tokenizer};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Fallback(#[from] FallbackError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

/// One experiment cell: its coordinates and either a report or an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub language: String,
    pub representation: String,
    pub classifier: String,
    pub pca: bool,
    /// Language whose embeddings were used, when it differs from `language`.
    pub embedding_language: Option<String>,
    /// Hyperparameters picked by grid search.
    pub selected: Option<ClassifierSpec>,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

impl CellRow {
    fn failed(key: &CellKey, error: String) -> Self {
        Self {
            language: key.language.clone(),
            representation: key.representation.clone(),
            classifier: key.classifier.clone(),
            pca: key.pca,
            embedding_language: None,
            selected: None,
            report: None,
            error: Some(error),
        }
    }

    pub fn id(&self) -> String {
        cell_id(&self.language, &self.representation, &self.classifier, self.pca)
    }

    pub fn f1(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.f1_macro)
    }

    /// Reduction plus fitting time.
    pub fn training_seconds(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.timing.reduce_seconds + r.timing.train_seconds)
    }

    pub fn succeeded(&self) -> bool {
        self.report.is_some()
    }
}

/// Cell rows in matrix order: language, representation, PCA setting, classifier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportTable {
    pub rows: Vec<CellRow>,
}

impl ReportTable {
    pub fn get(&self, language: &str, representation: &str, classifier: &str, pca: bool) -> Option<&CellRow> {
        self.rows.iter().find(|r| {
            r.language == language && r.representation == representation && r.classifier == classifier && r.pca == pca
        })
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellRow> {
        self.rows.iter().filter(|r| !r.succeeded())
    }

    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(CellRow::succeeded)
    }
}

/// Paired PCA-off / PCA-on results.
#[derive(Debug, Clone)]
pub struct AblationTable {
    pub matrix: ReportTable,
    pub rows: Vec<AblationRow>,
}

/// File-name-safe identifier of a cell.
pub fn cell_id(language: &str, representation: &str, classifier: &str, pca: bool) -> String {
    let clean = |s: &str| -> String {
        s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
    };
    format!("{}.{}.{}.{}", clean(language), clean(representation), clean(classifier), if pca { "pca" } else { "nopca" })
}

#[derive(Debug, Clone)]
struct CellKey {
    language: String,
    representation: String,
    classifier: String,
    pca: bool,
}

/// Output locations under `out_dir`.
struct Layout {
    predictions: PathBuf,
    cells: PathBuf,
    models: PathBuf,
    vocab: PathBuf,
}

impl Layout {
    fn create(cfg: &ExperimentConfig) -> Result<Self, RunError> {
        let out = &cfg.out_dir;
        let l = Self {
            predictions: out.join("predictions"),
            cells: out.join("cells"),
            models: out.join("models"),
            vocab: out.join("vocab"),
        };
        let mut dirs = vec![&l.predictions, &l.cells, &l.vocab];
        if cfg.save_models {
            dirs.push(&l.models);
        }
        for d in dirs {
            std::fs::create_dir_all(d).map_err(|source| RunError::Io { path: d.clone(), source })?;
        }
        Ok(l)
    }
}

/// Runs the full matrix, writes per-cell artifacts and report tables, and
/// returns the rows. Individual cell failures are recorded in their rows.
pub fn run_matrix(cfg: &ExperimentConfig) -> Result<ReportTable, RunError> {
    let resolver = match &cfg.fallback {
        Some(p) if cfg.representations.iter().any(|r| matches!(r, RepresentationSpec::WordVectors { .. })) => {
            Some(LanguageResolver::new(p.clone())?)
        }
        _ => None,
    };
    run_matrix_with(cfg, resolver.as_ref())
}

/// [`run_matrix`] with a caller-supplied language resolver.
pub fn run_matrix_with(cfg: &ExperimentConfig, resolver: Option<&LanguageResolver>) -> Result<ReportTable, RunError> {
    cfg.validate()?;
    let layout = Layout::create(cfg)?;
    let tokenizer = Tokenizer::new(cfg.tokenizer.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;

    let groups: Vec<(&String, &RepresentationSpec)> =
        cfg.languages.iter().flat_map(|l| cfg.representations.iter().map(move |r| (l, r))).collect();
    let ctx = Context { cfg, layout: &layout, tokenizer: &tokenizer, resolver };
    let rows: Vec<CellRow> =
        pool.install(|| groups.par_iter().map(|(lang, rep)| ctx.run_group(lang, rep)).collect::<Vec<_>>().concat());
    let table = ReportTable { rows };
    write_reports(cfg, &table)?;
    Ok(table)
}

/// Runs the matrix with PCA both off and on and pairs the results.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<AblationTable, RunError> {
    let mut cfg = cfg.clone();
    cfg.pca = vec![false, true];
    let matrix = run_matrix(&cfg)?;
    let rows = pair_ablation(&cfg, &matrix);
    Ok(AblationTable { matrix, rows })
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    layout: &'a Layout,
    tokenizer: &'a Tokenizer,
    resolver: Option<&'a LanguageResolver>,
}

/// Features and labels of one language under one representation.
struct GroupData {
    representation: FittedRepresentation,
    embedding_language: Option<String>,
    train: (FeatureMatrix, LabelMatrix),
    dev: Option<(FeatureMatrix, LabelMatrix)>,
    eval: (FeatureMatrix, LabelMatrix),
    eval_ids: Vec<String>,
    represent_seconds: f64,
}

/// Group features after the optional reduction stage.
struct Reduced {
    reduction: Option<FittedReduction>,
    train: FeatureMatrix,
    dev: Option<FeatureMatrix>,
    eval: FeatureMatrix,
    reduce_seconds: f64,
}

impl Context<'_> {
    fn keys(&self, lang: &str, rep: &RepresentationSpec) -> Vec<(CellKey, usize)> {
        let mut keys = Vec::new();
        for &pca in &self.cfg.pca {
            for (i, c) in self.cfg.classifiers.iter().enumerate() {
                keys.push((
                    CellKey {
                        language: lang.to_string(),
                        representation: rep.label().to_string(),
                        classifier: c.label().to_string(),
                        pca,
                    },
                    i,
                ));
            }
        }
        keys
    }

    fn cell_file(&self, key: &CellKey) -> PathBuf {
        self.layout
            .cells
            .join(format!("{}.json", cell_id(&key.language, &key.representation, &key.classifier, key.pca)))
    }

    fn prediction_file(&self, key: &CellKey) -> PathBuf {
        self.layout
            .predictions
            .join(format!("{}.csv", cell_id(&key.language, &key.representation, &key.classifier, key.pca)))
    }

    /// A completed row from an earlier run, when resuming.
    fn resumed(&self, key: &CellKey) -> Option<CellRow> {
        if !self.cfg.resume || !self.prediction_file(key).exists() {
            return None;
        }
        let text = std::fs::read_to_string(self.cell_file(key)).ok()?;
        let row: CellRow = serde_json::from_str(&text).ok()?;
        row.succeeded().then_some(row)
    }

    fn run_group(&self, lang: &str, rep: &RepresentationSpec) -> Vec<CellRow> {
        let keys = self.keys(lang, rep);
        let done: Vec<Option<CellRow>> = keys.iter().map(|(k, _)| self.resumed(k)).collect();
        if done.iter().all(Option::is_some) {
            log::info!("{lang}/{}: all cells already complete", rep.label());
            return done.into_iter().flatten().collect();
        }

        let data = match self.prepare(lang, rep) {
            Ok(d) => d,
            Err(e) => {
                log::warn!("{lang}/{}: {e}", rep.label());
                let msg = e.to_string();
                return keys
                    .iter()
                    .zip(done)
                    .map(|((k, _), d)| d.unwrap_or_else(|| self.record(CellRow::failed(k, msg.clone()))))
                    .collect();
            }
        };

        let reduced: Vec<(bool, Result<Reduced, RunError>)> =
            self.cfg.pca.par_iter().map(|&on| (on, self.reduce(&data, on))).collect();
        keys.par_iter()
            .zip(done)
            .map(|((key, clf), done)| {
                if let Some(row) = done {
                    return row;
                }
                let (_, red) = reduced.iter().find(|(on, _)| *on == key.pca).expect("every pca setting reduced");
                let row = match red {
                    Ok(red) => match self.run_cell(key, *clf, &data, red) {
                        Ok(row) => row,
                        Err(e) => CellRow::failed(key, e.to_string()),
                    },
                    Err(e) => CellRow::failed(key, e.to_string()),
                };
                if let Some(e) = &row.error {
                    log::warn!("{}: {e}", row.id());
                } else {
                    log::info!("{}: F1-macro {:.4}", row.id(), row.f1().unwrap_or(f64::NAN));
                }
                self.record(row)
            })
            .collect()
    }

    /// Persists a row for resumption; write failures are logged.
    fn record(&self, row: CellRow) -> CellRow {
        let key = CellKey {
            language: row.language.clone(),
            representation: row.representation.clone(),
            classifier: row.classifier.clone(),
            pca: row.pca,
        };
        let path = self.cell_file(&key);
        let json = serde_json::to_string_pretty(&row).expect("rows serialize");
        if let Err(e) = std::fs::write(&path, json) {
            log::warn!("{}: {e}", path.display());
        }
        row
    }

    fn load(&self, lang: &str, stem: &str, role: SplitRole) -> Result<DatasetSplit, RunError> {
        Ok(load_split_as(&self.cfg.split_path(lang, stem), lang, role)?)
    }

    fn prepare(&self, lang: &str, rep: &RepresentationSpec) -> Result<GroupData, RunError> {
        let cfg = self.cfg;
        let eval_stem = cfg.evaluate_on.file_stem();
        let train = self.load(lang, "train", SplitRole::Train)?;
        let needs_dev = cfg.uses_grid() || cfg.evaluate_on == EvalSplit::Dev;
        let dev = if needs_dev { Some(self.load(lang, "dev", SplitRole::Dev)?) } else { None };
        let eval = match (cfg.evaluate_on, &dev) {
            (EvalSplit::Dev, Some(d)) => d.clone(),
            _ => self.load(lang, eval_stem, SplitRole::Test)?,
        };
        if !eval.is_labeled() {
            return Err(RunError::Config(format!(
                "{}: evaluation split has no labels",
                cfg.split_path(lang, eval_stem).display()
            )));
        }
        let y_train = train.label_matrix()?;
        let y_dev = dev.as_ref().map(DatasetSplit::label_matrix).transpose()?;
        let y_eval = eval.label_matrix()?;

        let mut splits = vec![(&train, "train")];
        if let Some(d) = &dev {
            splits.push((d, "dev"));
        }
        splits.push((&eval, eval_stem));

        let (built, represent_seconds) = time_run(|| -> Result<_, RunError> {
            let mut embedding_language = None;
            let tokens = || -> Vec<Vec<_>> {
                splits
                    .iter()
                    .map(|(s, _)| {
                        self.tokenizer.tokenize_all(s.documents.iter().map(|d| (d.id.as_str(), d.text.as_str())))
                    })
                    .collect()
            };
            let (fitted, features) = match rep {
                RepresentationSpec::Bow { .. } | RepresentationSpec::Tfidf { .. } => {
                    let docs = tokens();
                    let fitted = if matches!(rep, RepresentationSpec::Bow { .. }) {
                        FittedRepresentation::Bow(fit_bow(&docs[0])?)
                    } else {
                        FittedRepresentation::Tfidf(fit_tfidf(&docs[0])?)
                    };
                    let refs: Vec<&[_]> = docs.iter().map(Vec::as_slice).collect();
                    let features = fitted.transform_many(&refs, &[])?;
                    (fitted, features)
                }
                RepresentationSpec::WordVectors { path, .. } => {
                    let code = match self.resolver {
                        Some(r) => {
                            let res = r.resolve(lang)?;
                            if res.language != lang {
                                log::info!("{lang}: using {} embeddings ({})", res.language, res.provenance);
                                embedding_language = Some(res.language.clone());
                            }
                            res.language
                        }
                        None => lang.to_string(),
                    };
                    let fitted = FittedRepresentation::WordVectors { path: fill(path, &code, "") };
                    let docs = tokens();
                    let refs: Vec<&[_]> = docs.iter().map(Vec::as_slice).collect();
                    let features = fitted.transform_many(&refs, &[])?;
                    (fitted, features)
                }
                RepresentationSpec::Precomputed { path, .. } => {
                    let inputs: Vec<(PathBuf, Vec<&str>)> =
                        splits.iter().map(|(s, stem)| (fill(path, lang, stem), s.ids())).collect();
                    let refs: Vec<(&Path, Vec<&str>)> =
                        inputs.iter().map(|(p, ids)| (p.as_path(), ids.clone())).collect();
                    let fitted = FittedRepresentation::Precomputed;
                    let features = fitted.transform_many(&[], &refs)?;
                    (fitted, features)
                }
            };
            Ok((fitted, features, embedding_language))
        });
        let (representation, mut features, embedding_language) = built?;

        match &representation {
            FittedRepresentation::Bow(v) => v.write_tsv(&self.vocab_file(lang, rep))?,
            FittedRepresentation::Tfidf(m) => m.vocabulary.write_tsv(&self.vocab_file(lang, rep))?,
            _ => {}
        }

        let x_eval = features.pop().expect("eval features");
        let x_dev = if dev.is_some() { features.pop() } else { None };
        let x_train = features.pop().expect("train features");
        Ok(GroupData {
            representation,
            embedding_language,
            train: (x_train, y_train),
            dev: x_dev.zip(y_dev),
            eval: (x_eval, y_eval),
            eval_ids: eval.documents.iter().map(|d| d.id.clone()).collect(),
            represent_seconds,
        })
    }

    fn vocab_file(&self, lang: &str, rep: &RepresentationSpec) -> PathBuf {
        let stem = cell_id(lang, rep.label(), "", false);
        let stem = stem.trim_end_matches(".nopca").trim_end_matches('.');
        self.layout.vocab.join(format!("{stem}.tsv"))
    }

    fn reduce(&self, data: &GroupData, on: bool) -> Result<Reduced, RunError> {
        if !on {
            return Ok(Reduced {
                reduction: None,
                train: data.train.0.clone(),
                dev: data.dev.as_ref().map(|d| d.0.clone()),
                eval: data.eval.0.clone(),
                reduce_seconds: 0.0,
            });
        }
        let rc = self.cfg.reduction;
        let (out, reduce_seconds) = time_run(|| -> Result<_, RunError> {
            let pca =
                if rc.normalize { fit_pca(&normalize_rows(&data.train.0), &rc)? } else { fit_pca(&data.train.0, &rc)? };
            let red = FittedReduction { normalize: rc.normalize, pca };
            let train = red.apply(&data.train.0)?;
            let dev = data.dev.as_ref().map(|d| red.apply(&d.0)).transpose()?;
            let eval = red.apply(&data.eval.0)?;
            Ok((red, train, dev, eval))
        });
        let (red, train, dev, eval) = out?;
        Ok(Reduced { reduction: Some(red), train, dev, eval, reduce_seconds })
    }

    fn run_cell(&self, key: &CellKey, clf: usize, data: &GroupData, red: &Reduced) -> Result<CellRow, RunError> {
        let cfg = self.cfg;
        let entry = &cfg.classifiers[clf];
        let seed = derive_seed(cfg.seed.wrapping_add(entry.spec.seed), clf as u64);
        let spec = entry.spec.clone().with_seed(seed);
        let y_train = &data.train.1;

        let (fitted, train_seconds) = time_run(|| -> Result<_, RunError> {
            match (&cfg.mlp_grid, spec.kind_name()) {
                (Some(grid), "mlp") => {
                    let (Some(x_dev), Some((_, y_dev))) = (&red.dev, &data.dev) else {
                        return Err(RunError::Config("grid search needs a dev split".into()));
                    };
                    let mut best: Option<(f64, FittedClassifier)> = None;
                    let result = grid_search_with(&spec, grid, |point| {
                        let model = fit(point, &red.train, y_train)?;
                        let score = f1_macro(y_dev, &model.predict(x_dev)?.labels)?;
                        if best.as_ref().is_none_or(|(b, _)| score > *b) {
                            best = Some((score, model));
                        }
                        Ok(score)
                    })?;
                    log::debug!("{}: grid best dev F1-macro {:.4}", key.classifier, result.best_score);
                    Ok((best.expect("grid is non-empty").1, Some(result.best)))
                }
                _ => Ok((fit(&spec, &red.train, y_train)?, None)),
            }
        });
        let (model, selected) = fitted?;
        let (pred, predict_seconds) = time_run(|| model.predict(&red.eval));
        let pred = pred?.labels;
        let gold = &data.eval.1;

        let report = EvalReport {
            language: key.language.clone(),
            representation: key.representation.clone(),
            classifier: key.classifier.clone(),
            pca: key.pca,
            f1_macro: f1_macro(gold, &pred)?,
            per_label_f1: per_label_f1(gold, &pred)?,
            rates: confusion_rates(gold, &pred)?,
            timing: TimingRecord {
                represent_seconds: data.represent_seconds,
                reduce_seconds: red.reduce_seconds,
                train_seconds,
                predict_seconds,
            },
        };
        let ids: Vec<&str> = data.eval_ids.iter().map(String::as_str).collect();
        write_predictions(&self.prediction_file(key), &ids, &pred)?;
        if cfg.save_models {
            let pipeline = PipelineModel {
                language: key.language.clone(),
                tokenizer: cfg.tokenizer.clone(),
                representation: data.representation.clone(),
                reduction: red.reduction.clone(),
                classifier: model,
            };
            let id = cell_id(&key.language, &key.representation, &key.classifier, key.pca);
            pipeline.save(&self.layout.models.join(format!("{id}.bin")))?;
        }
        Ok(CellRow {
            language: key.language.clone(),
            representation: key.representation.clone(),
            classifier: key.classifier.clone(),
            pca: key.pca,
            embedding_language: data.embedding_language.clone(),
            selected,
            report: Some(report),
            error: None,
        })
    }
}
