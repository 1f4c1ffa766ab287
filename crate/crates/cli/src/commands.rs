//! One function per subcommand. Each takes the resolved configuration and
//! returns the text to print on success.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use codemix_core::augment::{augment_corpus, AugmentStage, SynonymLexicon};
use codemix_core::corpus::{read_dataset, stratified_split, write_dataset, write_split, DatasetFormat, SaveOptions};
use codemix_core::embeddings::{encode_sequence, load_embeddings, EmbeddingTable};
use codemix_core::evaluate::{compare_runs, evaluate, MetricsReport};
use codemix_core::model::argmax_label;
use codemix_core::model::checkpoint::Checkpoint;
use codemix_core::pipeline::{
    build_vocabulary, encode_corpus, holdout_validation, new_model, preprocess_corpus, run_experiment,
};
use codemix_core::preprocess::{preprocess_pipeline, Resources, StopwordList, TransliterationDictionary};
use codemix_core::synthetic::{generate, proportional_sizes, synonym_lexicon, SyntheticMode, SyntheticSpec};
use codemix_core::training::{predict_all, Trainer, TrainingOutcome};
use codemix_core::{ClassCounts, LabeledCorpus};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Writes through a temporary file in the same directory, so readers never
/// see a partial file and failures leave the old contents in place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn read_corpus(path: &Path) -> Result<LabeledCorpus, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset(file, &DatasetFormat::default()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// The origin column is written when asked for or when any record needs it.
fn write_corpus(path: &Path, corpus: &LabeledCorpus, config: &RunConfig, with_origin: bool) -> Result<(), CliError> {
    let options = SaveOptions {
        with_origin: with_origin || corpus.records().iter().any(|r| !r.is_original()),
        provenance: config.provenance(),
    };
    let mut buffer = Vec::new();
    write_dataset(&mut buffer, corpus, &DatasetFormat::default(), &options)?;
    write_atomic(path, &buffer)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, (serde_json::to_string_pretty(value)? + "\n").as_bytes())
}

pub fn resources(config: &RunConfig) -> Result<Resources, CliError> {
    let stopwords = match &config.preprocess.stopwords {
        Some(path) => StopwordList::load(path)?,
        None => StopwordList::shipped(),
    };
    let dictionary = match &config.preprocess.dictionary {
        Some(path) => TransliterationDictionary::load(path)?,
        None => TransliterationDictionary::shipped(),
    };
    Resources::new(stopwords, dictionary).map_err(|e| CliError::Config(format!("`preprocess`: {e}")))
}

fn lexicon(config: &RunConfig, extra: Option<&Path>) -> Result<SynonymLexicon, CliError> {
    let mut lexicon = SynonymLexicon::shipped();
    for path in config.augment.synonyms.as_deref().into_iter().chain(extra) {
        lexicon.extend(SynonymLexicon::load(path)?);
    }
    Ok(lexicon)
}

fn embedding_table(config: &RunConfig) -> Result<Option<EmbeddingTable>, CliError> {
    config
        .model
        .embeddings
        .as_deref()
        .map(|path| load_embeddings(path, config.model.embedding_dimension))
        .transpose()
        .map_err(CliError::from)
}

fn provenance_line(config: &RunConfig) -> String {
    format!("config_hash={} seed={}", config.hash(), config.seed)
}

pub struct PreprocessArgs {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub trace: bool,
}

pub fn preprocess(config: &RunConfig, args: &PreprocessArgs) -> Result<String, CliError> {
    if args.output.is_none() && args.split.is_none() {
        return Err(CliError::Usage("preprocess needs --output, --split or both".into()));
    }
    let corpus = read_corpus(&args.input)?;
    let processed = preprocess_corpus(&corpus, &resources(config)?)?;
    if processed.corpus.is_empty() {
        return Err(CliError::Data("every record is empty after preprocessing".into()));
    }
    let mut out = String::new();
    if let Some(output) = &args.output {
        write_corpus(output, &processed.corpus, config, false)?;
        let _ = writeln!(out, "wrote {} records to {}", processed.corpus.len(), output.display());
    }
    if let Some(dir) = &args.split {
        let fraction = config.split.test_fraction;
        let (train, test) = stratified_split(&processed.corpus, fraction, config.seed)?;
        let manifest = write_split(
            dir,
            &train,
            &test,
            &DatasetFormat::default(),
            config.seed,
            fraction,
            &config.provenance(),
        )?;
        let _ = writeln!(
            out,
            "split into train {} and test {} under {}",
            manifest.train_counts,
            manifest.test_counts,
            dir.display()
        );
    }
    if !processed.dropped.is_empty() {
        let _ = writeln!(out, "dropped {} records left empty", processed.dropped.len());
    }
    if args.trace {
        let t = processed.trace;
        let _ = writeln!(
            out,
            "tokens: tokenized {}, after stopwords {}, after transliteration {}",
            t.tokenized, t.after_stopwords, t.after_transliteration
        );
    }
    let _ = writeln!(out, "{}", provenance_line(config));
    Ok(out)
}

pub fn augment(config: &RunConfig, input: &Path, output: &Path, synonyms: Option<&Path>) -> Result<String, CliError> {
    let corpus = read_corpus(input)?;
    let augment_config = config.augment_config();
    let resources = resources(config)?;
    let augmented = augment_corpus(
        &corpus,
        &augment_config,
        &lexicon(config, synonyms)?,
        resources.stopwords(),
    )?;
    write_corpus(output, &augmented, config, true)?;
    let note = match augment_config.stage {
        AugmentStage::BeforePreprocess => " (raw text; preprocess next)",
        AugmentStage::AfterPreprocess => "",
    };
    Ok(format!(
        "{} -> {} records {}{note}\n{}\n",
        corpus.counts(),
        augmented.len(),
        augmented.counts(),
        provenance_line(config)
    ))
}

pub struct TrainArgs {
    pub train: PathBuf,
    pub validation: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub resume: Option<PathBuf>,
}

/// History lines are epoch records tagged with the run's provenance.
fn history_jsonl(outcome: &TrainingOutcome, config: &RunConfig) -> Result<String, CliError> {
    let mut out = String::new();
    for record in &outcome.history.records {
        let mut value = serde_json::to_value(record)?;
        value["config_hash"] = config.hash().into();
        value["seed"] = config.seed.into();
        out.push_str(&serde_json::to_string(&value)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config_hash: String,
    train_size: usize,
    validation_size: usize,
    #[serde(flatten)]
    summary: &'a codemix_core::training::TrainingSummary,
}

pub fn train(config: &RunConfig, args: &TrainArgs) -> Result<String, CliError> {
    let corpus = read_corpus(&args.train)?;
    let (train_part, validation) = match &args.validation {
        Some(path) => (corpus, read_corpus(path)?),
        None => holdout_validation(&corpus, config.split.validation_fraction, config.seed)?,
    };
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let resume_path = args.out_dir.join("resume.ckpt");
    let schedule = config.schedule(Some(resume_path));

    let (trainer, vocabulary) = match &args.resume {
        Some(path) => {
            let checkpoint = Checkpoint::load(path)?;
            if checkpoint.model.config() != &config.model_config() {
                return Err(CliError::Config(format!(
                    "checkpoint model {} differs from the configured model {}",
                    checkpoint.model.config().descriptor(),
                    config.model_config().descriptor()
                )));
            }
            let vocabulary = checkpoint.vocabulary.clone();
            let max_length = checkpoint.model.config().max_length;
            let train_set = encode_corpus(&train_part, &vocabulary, max_length);
            let validation_set = encode_corpus(&validation, &vocabulary, max_length);
            (
                Trainer::resume(checkpoint, train_set, validation_set, schedule)?,
                vocabulary,
            )
        }
        None => {
            let vocabulary = build_vocabulary(&train_part, config.model.min_frequency);
            let table = embedding_table(config)?;
            let model = new_model(config.model_config(), &vocabulary, table.as_ref())?;
            let max_length = config.model.max_length;
            let trainer = Trainer::new(
                model,
                encode_corpus(&train_part, &vocabulary, max_length),
                encode_corpus(&validation, &vocabulary, max_length),
                schedule,
            )?
            .with_vocabulary(vocabulary.clone());
            (trainer, vocabulary)
        }
    };
    let outcome = trainer.with_metadata(config.metadata()).run()?;
    let mut checkpoint = Checkpoint::new(outcome.model.clone(), vocabulary.clone());
    checkpoint.metadata = config.metadata();
    checkpoint.save(&args.out_dir.join("model.ckpt"))?;
    write_atomic(&args.out_dir.join("vocab.tsv"), vocabulary.dump().as_bytes())?;
    write_atomic(
        &args.out_dir.join("history.jsonl"),
        history_jsonl(&outcome, config)?.as_bytes(),
    )?;
    write_json(
        &args.out_dir.join("summary.json"),
        &SummaryFile {
            config_hash: config.hash(),
            train_size: train_part.len(),
            validation_size: validation.len(),
            summary: &outcome.summary,
        },
    )?;
    let s = &outcome.summary;
    Ok(format!(
        "{}: {} epochs, best epoch {} with validation loss {}{}\nwrote {}\n{}\n",
        s.descriptor,
        s.epochs_completed,
        s.best_epoch.map_or("-".into(), |e| e.to_string()),
        s.best_validation_loss.map_or("-".into(), |l| format!("{l:.6}")),
        if s.stopped_early { " (stopped early)" } else { "" },
        args.out_dir.join("model.ckpt").display(),
        provenance_line(config)
    ))
}

pub struct EvaluateArgs {
    pub checkpoint: PathBuf,
    pub test: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub preprocess: bool,
}

fn write_report(dir: &Path, report: &MetricsReport) -> Result<(), CliError> {
    write_json(&dir.join("metrics.json"), report)?;
    let hash = report.config_hash.as_deref().unwrap_or("-");
    let text = format!("# config_hash={hash}\n# seed={}\n{}", report.seed, report.to_table());
    write_atomic(&dir.join("metrics.txt"), text.as_bytes())
}

pub fn evaluate_cmd(config: &RunConfig, args: &EvaluateArgs) -> Result<String, CliError> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let mut test = read_corpus(&args.test)?;
    if args.preprocess {
        test = preprocess_corpus(&test, &resources(config)?)?.corpus;
    }
    let model = &checkpoint.model;
    let data = encode_corpus(&test, &checkpoint.vocabulary, model.config().max_length);
    // The report carries the provenance of the run that produced the model.
    let seed = checkpoint
        .metadata
        .get("seed")
        .and_then(|s| s.parse().ok())
        .unwrap_or(config.seed);
    let mut report = evaluate(model, &data, seed)?;
    report.config_hash = Some(
        checkpoint
            .metadata
            .get("config_hash")
            .cloned()
            .unwrap_or_else(|| config.hash()),
    );
    if let Some(dir) = &args.out_dir {
        write_report(dir, &report)?;
    }
    Ok(report.to_table())
}

pub fn predict(
    config: &RunConfig,
    checkpoint: &Path,
    texts: &[String],
    input: Option<&Path>,
) -> Result<String, CliError> {
    let checkpoint = Checkpoint::load(checkpoint)?;
    let mut messages = texts.to_vec();
    if let Some(path) = input {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        messages.extend(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
    }
    if messages.is_empty() {
        return Err(CliError::Usage("nothing to predict; pass --text or --input".into()));
    }
    let resources = resources(config)?;
    let max_length = checkpoint.model.config().max_length;
    let sequences: Vec<_> = messages
        .iter()
        .map(|m| {
            encode_sequence(
                &preprocess_pipeline(m, &resources, false).tokens,
                &checkpoint.vocabulary,
                max_length,
            )
        })
        .collect();
    let probabilities = predict_all(&checkpoint.model, &sequences)?;
    let mut out = String::new();
    for (key, value) in &checkpoint.metadata {
        let _ = writeln!(out, "# {key}={value}");
    }
    out.push_str("label\tp_non_offensive\tp_offensive\tp_hate_inducing\ttext\n");
    for (p, message) in probabilities.iter().zip(&messages) {
        let _ = writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{message}",
            argmax_label(p),
            p[0],
            p[1],
            p[2]
        );
    }
    Ok(out)
}

pub struct SyntheticArgs {
    pub output: PathBuf,
    pub per_class: Option<ClassCounts>,
    pub total: Option<usize>,
    pub shape: ClassCounts,
    pub mode: SyntheticMode,
    pub overlap: f64,
    pub lexicon_out: Option<PathBuf>,
}

pub fn gen_synthetic(config: &RunConfig, args: &SyntheticArgs) -> Result<String, CliError> {
    let per_class = match (args.per_class, args.total) {
        (Some(_), Some(_)) => return Err(CliError::Usage("pass either --per-class or --total".into())),
        (Some(counts), None) => counts,
        (None, Some(total)) => proportional_sizes(total, args.shape),
        (None, None) => ClassCounts([10, 10, 10]),
    };
    let spec = SyntheticSpec {
        per_class,
        mode: args.mode,
        overlap: args.overlap,
        seed: config.seed,
        ..Default::default()
    };
    let corpus = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    write_corpus(&args.output, &corpus, config, false)?;
    if let Some(path) = &args.lexicon_out {
        write_atomic(path, synonym_lexicon(&spec).to_tsv().as_bytes())?;
    }
    Ok(format!(
        "wrote {} records {} to {}\n",
        corpus.len(),
        corpus.counts(),
        args.output.display()
    ))
}

pub fn grid(config: &RunConfig, train_path: &Path, test_path: &Path, out_dir: &Path) -> Result<String, CliError> {
    if config.augment.stage == "before" {
        return Err(CliError::Config(
            "`augment.stage` must be `after` for grid runs, which take preprocessed files".into(),
        ));
    }
    let train_corpus = read_corpus(train_path)?;
    let test_corpus = read_corpus(test_path)?;
    let resources = resources(config)?;
    let lexicon = lexicon(config, None)?;
    let cells = config.grid_cells();
    let mut reports = Vec::with_capacity(cells.len());
    let mut log = String::new();
    for (index, cell) in cells.iter().enumerate() {
        let tag = cell.cell_tag();
        let dir = out_dir.join("cells").join(format!("{index:03}-{tag}"));
        let metrics_path = dir.join("metrics.json");
        let hash = cell.hash();
        if let Ok(text) = fs::read_to_string(&metrics_path) {
            if let Ok(report) = serde_json::from_str::<MetricsReport>(&text) {
                if report.config_hash.as_deref() == Some(hash.as_str()) && report.validate().is_ok() {
                    log::info!("cell {tag}: reusing {}", metrics_path.display());
                    let _ = writeln!(log, "cell {index} {tag}: done earlier");
                    reports.push(report);
                    continue;
                }
            }
        }
        log::info!("cell {tag}: training");
        let table = embedding_table(cell)?;
        let result = run_experiment(
            &train_corpus,
            &test_corpus,
            &cell.experiment(),
            &lexicon,
            &resources,
            table.as_ref(),
        )?;
        let mut report = result.report;
        report.name = tag.clone();
        report.config_hash = Some(hash);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let mut checkpoint = Checkpoint::new(result.outcome.model.clone(), result.vocabulary);
        checkpoint.metadata = cell.metadata();
        checkpoint.save(&dir.join("model.ckpt"))?;
        write_atomic(
            &dir.join("history.jsonl"),
            history_jsonl(&result.outcome, cell)?.as_bytes(),
        )?;
        write_atomic(&dir.join("config.toml"), toml_string(cell)?.as_bytes())?;
        // Written last: its presence marks the cell complete.
        write_report(&dir, &report)?;
        let _ = writeln!(log, "cell {index} {tag}: macro-F1 {:.4}", report.macro_f1);
        reports.push(report);
    }
    let comparison = compare_runs(&reports)?;
    let header = format!("# {}\n", provenance_line(config));
    let table = comparison.to_table();
    write_atomic(&out_dir.join("comparison.txt"), format!("{header}{table}").as_bytes())?;
    write_atomic(
        &out_dir.join("comparison.csv"),
        format!("{header}{}", comparison.to_csv()?).as_bytes(),
    )?;
    Ok(format!("{log}\n{table}"))
}

fn toml_string(config: &RunConfig) -> Result<String, CliError> {
    toml::to_string(config).map_err(|e| CliError::Data(format!("serializing config: {e}")))
}

pub fn show_config(config: &RunConfig) -> Result<String, CliError> {
    Ok(format!("# config_hash={}\n{}", config.hash(), toml_string(config)?))
}
