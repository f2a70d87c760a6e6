use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use emotion_core::corpus::{load_split_as, summarize, SplitRole};
use emotion_core::dense_features::{embed_documents, load_word_vectors_filtered};
use emotion_core::runner::{
    fill, run_ablation, run_matrix, ExperimentConfig, FittedRepresentation, PipelineModel, RepresentationSpec,
};
use emotion_core::sparse_features::fit_bow;
use emotion_core::synthetic::{SyntheticCorpus, SyntheticSpec};
use emotion_core::Tokenizer;

/// Multi-label emotion detection experiments.
#[derive(Parser)]
#[command(name = "emotion", version)]
struct Cli {
    /// Log progress (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of the experiment matrix and write reports.
    Run(RunArgs),
    /// Run the matrix with PCA off and on and print the paired tables.
    Ablate(RunArgs),
    /// Label an `id,text` CSV with a saved pipeline model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Document vectors for models trained on precomputed embeddings.
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Corpus, vocabulary and embedding statistics for a config, or a model summary.
    Inspect {
        #[arg(long, conflicts_with = "model", required_unless_present = "model")]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write the synthetic example corpus and its config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent cells; use 1 for meaningful timings.
    #[arg(long)]
    workers: Option<usize>,
    /// Skip cells already completed in the output directory.
    #[arg(long)]
    resume: bool,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.resume |= self.resume;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Exit status 2 means the matrix finished but some cells failed.
fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let table = run_matrix(&cfg)?;
            print_report(&cfg.out_dir)?;
            Ok(matrix_status(table.failures().count(), table.rows.len()))
        }
        Command::Ablate(args) => {
            let cfg = args.load()?;
            let ab = run_ablation(&cfg)?;
            println!(
                "{:<10} {:<16} {:<10} {:>10} {:>10} {:>10}",
                "language", "representation", "classifier", "w/o PCA", "w/ PCA", "delta"
            );
            let f = |v: Option<f64>| v.map_or_else(|| "error".to_string(), |v| format!("{v:.4}"));
            for r in &ab.rows {
                println!(
                    "{:<10} {:<16} {:<10} {:>10} {:>10} {:>10}",
                    r.language,
                    r.representation,
                    r.classifier,
                    f(r.f1_without),
                    f(r.f1_with),
                    f(r.f1_delta())
                );
            }
            println!("\ntables written to {}", cfg.out_dir.display());
            Ok(matrix_status(ab.matrix.failures().count(), ab.matrix.rows.len()))
        }
        Command::Predict { model, input, output, embeddings } => {
            let n = emotion_core::predict_file(&model, &input, &output, embeddings.as_deref())?;
            println!("wrote {n} predictions to {}", output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Inspect { config, model } => {
            match (config, model) {
                (_, Some(m)) => inspect_model(&m)?,
                (Some(c), None) => inspect_config(&c)?,
                (None, None) => bail!("pass --config or --model"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth { out, seed } => {
            let mut spec = SyntheticSpec::default();
            if let Some(s) = seed {
                spec.seed = s;
            }
            SyntheticCorpus::generate(&spec).write(&out)?;
            println!("wrote synthetic corpus and {}", out.join("config.json").display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn matrix_status(failed: usize, total: usize) -> ExitCode {
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{failed} of {total} cells failed");
        ExitCode::from(2)
    }
}

fn print_report(out: &Path) -> Result<()> {
    let path = out.join("report.txt");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    print!("{text}");
    Ok(())
}

fn inspect_config(path: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_file(path)?;
    cfg.validate()?;
    let tokenizer = Tokenizer::new(cfg.tokenizer.clone())?;
    println!(
        "{} cells: {} languages x {} representations x {} pca settings x {} classifiers",
        cfg.n_cells(),
        cfg.languages.len(),
        cfg.representations.len(),
        cfg.pca.len(),
        cfg.classifiers.len()
    );
    for lang in &cfg.languages {
        println!("\n[{lang}]");
        let train = load_split_as(&cfg.split_path(lang, "train"), lang, SplitRole::Train)?;
        for (stem, role) in [("dev", SplitRole::Dev), ("test", SplitRole::Test)] {
            let p = cfg.split_path(lang, stem);
            if p.exists() {
                let s = load_split_as(&p, lang, role)?;
                println!("{stem}: {} documents{}", s.len(), if s.is_labeled() { "" } else { " (unlabeled)" });
            }
        }
        println!("train: {} documents", train.len());
        for b in summarize(&train)? {
            println!("  {:<9} {:>6} positive ({:.1}%)", b.label, b.positives, 100.0 * b.positive_fraction());
        }
        let docs = tokenizer.tokenize_all(train.documents.iter().map(|d| (d.id.as_str(), d.text.as_str())));
        let n_tokens: usize = docs.iter().map(|d| d.len()).sum();
        println!("tokens: {n_tokens}, vocabulary: {}", fit_bow(&docs)?.len());
        for rep in &cfg.representations {
            if let RepresentationSpec::WordVectors { path, .. } = rep {
                let file = fill(path, lang, "");
                if !file.exists() {
                    println!("{}: {} not found (language may need fallback)", rep.label(), file.display());
                    continue;
                }
                let keep: HashSet<String> = docs.iter().flat_map(|d| d.tokens.iter().cloned()).collect();
                let table = load_word_vectors_filtered(&file, Some(&keep))?;
                let (_, oov) = embed_documents(&docs, &table);
                println!(
                    "{}: dimension {}, {} of {} tokens OOV, {} documents fully OOV",
                    rep.label(),
                    table.dimension(),
                    oov.oov_tokens,
                    oov.tokens,
                    oov.fully_oov_documents
                );
            }
        }
    }
    Ok(())
}

fn inspect_model(path: &Path) -> Result<()> {
    let m = PipelineModel::load(path)?;
    println!("language: {}", m.language);
    println!("tokenizer: {}", serde_json::to_string(&m.tokenizer)?);
    let rep = match &m.representation {
        FittedRepresentation::Bow(v) => format!("bag of words, {} terms", v.len()),
        FittedRepresentation::Tfidf(t) => format!("tf-idf, {} terms", t.vocabulary.len()),
        FittedRepresentation::WordVectors { path } => format!("word vectors from {}", path.display()),
        FittedRepresentation::Precomputed => "precomputed document vectors".to_string(),
    };
    println!("representation: {rep}");
    match &m.reduction {
        Some(r) => println!("pca: {} -> {} dimensions", r.pca.n_features(), r.pca.n_components()),
        None => println!("pca: off"),
    }
    println!("classifier: {}", serde_json::to_string(&m.classifier.spec)?);
    Ok(())
}
