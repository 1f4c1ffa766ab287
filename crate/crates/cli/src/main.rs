//! `codemix`: preprocess, augment, train, evaluate and compare code-mixed
//! message classifiers.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric
//! failure during training.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use codemix_core::model::CellKind;
use codemix_core::synthetic::SyntheticMode;
use codemix_core::ClassCounts;

use crate::commands::{EvaluateArgs, PreprocessArgs, SyntheticArgs, TrainArgs};
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "codemix",
    version,
    about = "Offensive-language classification for code-mixed text"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set model.hidden_units=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Run seed; wins over the config file and `--set`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, tokenize, drop stopwords and transliterate a dataset.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write a stratified train/test split into this directory.
        #[arg(long)]
        split: Option<PathBuf>,
        /// Print token counts after each stage.
        #[arg(long)]
        trace: bool,
    },
    /// Oversample a training file with EDA variants.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Extra synonym lexicon, `token<TAB>syn1,syn2`.
        #[arg(long)]
        synonyms: Option<PathBuf>,
    },
    /// Train a model; writes model.ckpt, resume.ckpt, history.jsonl and summary.json.
    Train {
        #[arg(long)]
        train: PathBuf,
        /// Validation file; by default a stratified part of --train is held out.
        #[arg(long)]
        validation: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Continue from a resume.ckpt written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        cell: Option<CellKind>,
        #[arg(long)]
        units: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Score a checkpoint on a labelled test file.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Write metrics.json and metrics.txt here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Run the preprocessing pipeline over the test file first.
        #[arg(long)]
        preprocess: bool,
    },
    /// Classify raw messages.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        text: Vec<String>,
        /// One message per line.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Generate a seeded synthetic three-class corpus.
    GenSynthetic {
        #[arg(long)]
        output: PathBuf,
        /// Records per class, `a,b,c`.
        #[arg(long, value_parser = parse_counts)]
        per_class: Option<ClassCounts>,
        /// Total size, spread over the classes in proportion to --shape.
        #[arg(long)]
        total: Option<usize>,
        #[arg(long, value_parser = parse_counts, default_value = "1,1,1")]
        shape: ClassCounts,
        #[arg(long, default_value = "separable")]
        mode: SyntheticMode,
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        /// Write a synonym lexicon matching the generated vocabulary.
        #[arg(long)]
        lexicon_out: Option<PathBuf>,
    },
    /// Train and evaluate every point of the `[grid]` section.
    Grid {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the resolved configuration and its hash.
    ShowConfig,
}

fn parse_counts(raw: &str) -> Result<ClassCounts, String> {
    let parts: Vec<usize> = raw
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let counts: [usize; 3] = parts
        .try_into()
        .map_err(|_| "expected three comma-separated counts".to_string())?;
    Ok(ClassCounts(counts))
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut overrides = cli.overrides;
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Command::Train {
        epochs,
        learning_rate,
        cell,
        units,
        dim,
        ..
    } = &cli.command
    {
        let named = [
            epochs.map(|v| format!("training.epochs={v}")),
            learning_rate.map(|v| format!("training.learning_rate={v:?}")),
            cell.map(|v| format!("model.cell=\"{v}\"")),
            units.map(|v| format!("model.hidden_units={v}")),
            dim.map(|v| format!("model.embedding_dimension={v}")),
        ];
        overrides.extend(named.into_iter().flatten());
    }
    let config = RunConfig::resolve(cli.config.as_deref(), &overrides)?;
    log::info!("config hash {}", config.hash());

    match cli.command {
        Command::Preprocess {
            input,
            output,
            split,
            trace,
        } => commands::preprocess(
            &config,
            &PreprocessArgs {
                input,
                output,
                split,
                trace,
            },
        ),
        Command::Augment {
            input,
            output,
            synonyms,
        } => commands::augment(&config, &input, &output, synonyms.as_deref()),
        Command::Train {
            train,
            validation,
            out_dir,
            resume,
            ..
        } => commands::train(
            &config,
            &TrainArgs {
                train,
                validation,
                out_dir,
                resume,
            },
        ),
        Command::Evaluate {
            checkpoint,
            test,
            out_dir,
            preprocess,
        } => commands::evaluate_cmd(
            &config,
            &EvaluateArgs {
                checkpoint,
                test,
                out_dir,
                preprocess,
            },
        ),
        Command::Predict {
            checkpoint,
            text,
            input,
        } => commands::predict(&config, &checkpoint, &text, input.as_deref()),
        Command::GenSynthetic {
            output,
            per_class,
            total,
            shape,
            mode,
            overlap,
            lexicon_out,
        } => commands::gen_synthetic(
            &config,
            &SyntheticArgs {
                output,
                per_class,
                total,
                shape,
                mode,
                overlap,
                lexicon_out,
            },
        ),
        Command::Grid { train, test, out_dir } => commands::grid(&config, &train, &test, &out_dir),
        Command::ShowConfig => commands::show_config(&config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
