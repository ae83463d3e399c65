//! Command-line surface: preprocess → train → predict / attention.
//!
//! Every command writes a [`RunManifest`] next to its outputs; `replay`
//! reruns a manifest's recorded arguments.

pub mod manifest;
pub mod store;

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use icu_attend::ingest::IngestError;
use icu_attend::model::{attention_trace, predict, Encoder, ModelError, Pooling};
use icu_attend::preprocess::PreprocessError;
use icu_attend::train::{cross_validate, results_table, TrainError};
use icu_attend::{FittedPreprocessor, ModelFile, TrainConfig, Variant};

pub use manifest::RunManifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Ingest {
        path: PathBuf,
        #[source]
        source: IngestError,
    },
    #[error("{}: {source}", path.display())]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("json: {0}")]
    Json(#[source] serde_json::Error),
    #[error("feature store: {0}")]
    Store(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

#[derive(Debug, Parser)]
#[command(name = "icu-attend", version, about = "Attention LSTM mortality prediction for ICU time-series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse records, fit preprocessing on all episodes and write a feature store.
    Preprocess(PreprocessArgs),
    /// Cross-validate a model variant on a feature store.
    Train(TrainArgs),
    /// Score record files with a trained model.
    Predict(PredictArgs),
    /// Export per-head attention probabilities for record files.
    Attention(AttentionArgs),
    /// Rerun the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PreprocessArgs {
    /// Directory of record files (`*.txt`).
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Outcomes file with RecordID and In-hospital_death columns.
    #[arg(long)]
    pub outcomes: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub interval_hours: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingArg {
    Attention,
    Mean,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Feature store written by `preprocess`.
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Preset: lr-baseline, lstm-mean, lstm-attn or bilstm-attn. Overrides
    /// --bidirectional and --pooling.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 2)]
    pub heads: usize,
    /// Width of each head's scoring layer.
    #[arg(long, default_value_t = 16)]
    pub attention_hidden: usize,
    #[arg(long)]
    pub bidirectional: bool,
    #[arg(long, value_enum, default_value_t = PoolingArg::Attention)]
    pub pooling: PoolingArg,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub dropout_in: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dropout_out: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    /// Train folds one after another instead of on separate threads.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Output table (record_id, risk).
    #[arg(long)]
    pub out: PathBuf,
    /// Record files to score.
    #[arg(required = true)]
    pub episodes: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AttentionArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Output table (record_id, head, interval, probability).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-interval state vectors.
    #[arg(long)]
    pub states: Option<PathBuf>,
    #[arg(required = true)]
    pub episodes: Vec<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let recorded = args[1..].to_vec();
    match cli.command {
        Command::Preprocess(a) => cmd_preprocess(&a, recorded),
        Command::Train(a) => cmd_train(&a, recorded),
        Command::Predict(a) => cmd_predict(&a, recorded),
        Command::Attention(a) => cmd_attention(&a, recorded),
        Command::Replay { manifest } => {
            let m = RunManifest::read(&manifest)?;
            run(std::iter::once("icu-attend".to_string()).chain(m.args))
        }
    }
}

fn flags_json<T: Serialize>(flags: &T) -> Result<serde_json::Value> {
    serde_json::to_value(flags).map_err(CliError::Json)
}

pub fn cmd_preprocess(args: &PreprocessArgs, recorded: Vec<String>) -> Result<()> {
    if args.interval_hours == 0 {
        return Err(CliError::Usage("--interval-hours must be positive".into()));
    }
    let episodes = store::load_labeled(&args.data_dir, &args.outcomes)?;
    let fitted = FittedPreprocessor::fit(&episodes, args.interval_hours * 60)?;
    store::write_store(&args.out_dir, &episodes, &fitted)?;

    let mut inputs = store::record_files(&args.data_dir)?;
    inputs.push(args.outcomes.clone());
    RunManifest {
        command: "preprocess".into(),
        args: recorded,
        flags: flags_json(args)?,
        seed: None,
        dataset_digest: manifest::digest_files(&inputs)?,
        artifact_version: manifest::ARTIFACT_VERSION.into(),
    }
    .write(&args.out_dir.join("manifest.json"))
}

/// Resolves the preset: `--variant` wins, otherwise the encoder and pooling
/// flags pick one.
pub fn resolve_variant(args: &TrainArgs) -> Result<Variant> {
    if let Some(v) = &args.variant {
        return v.parse().map_err(CliError::Usage);
    }
    match (args.bidirectional, args.pooling) {
        (false, PoolingArg::Mean) => Ok(Variant::LstmMean),
        (false, PoolingArg::Attention) => Ok(Variant::LstmAttn),
        (true, PoolingArg::Attention) => Ok(Variant::BilstmAttn),
        (true, PoolingArg::Mean) => Err(CliError::Usage(
            "--bidirectional with --pooling mean is not a supported configuration".into(),
        )),
    }
}

pub fn train_config(args: &TrainArgs, interval_minutes: u32) -> TrainConfig {
    let mut cfg = TrainConfig {
        learning_rate: args.lr,
        batch_size: args.batch,
        max_epochs: args.epochs,
        patience: args.patience,
        seed: args.seed,
        folds: args.folds,
        interval_minutes,
        parallel_folds: !args.sequential,
        ..TrainConfig::default()
    };
    cfg.model.hidden = args.hidden;
    cfg.model.heads = args.heads;
    cfg.model.attention_hidden = args.attention_hidden;
    cfg.model.dropout_in = args.dropout_in;
    cfg.model.dropout_out = args.dropout_out;
    cfg.model.encoder = if args.bidirectional { Encoder::BiLstm } else { Encoder::Lstm };
    cfg.model.pooling = match args.pooling {
        PoolingArg::Attention => Pooling::Attention,
        PoolingArg::Mean => Pooling::Mean,
    };
    cfg
}

pub const RESULTS_FILE: &str = "results.tsv";

pub fn model_file_name(fold: usize) -> String {
    format!("fold{}.model.json", fold + 1)
}

pub fn cmd_train(args: &TrainArgs, recorded: Vec<String>) -> Result<()> {
    let variant = resolve_variant(args)?;
    let (episodes, stored) = store::read_store(&args.store)?;
    let cfg = train_config(args, stored.interval_minutes);
    let report = cross_validate(&episodes, &cfg, variant)?;

    for outcome in &report.folds {
        let file = ModelFile {
            params: outcome.result.best_params.clone(),
            preprocessor: Some(outcome.preprocessor.clone()),
        };
        write_text(&args.out_dir.join(model_file_name(outcome.result.fold)), &(file.to_json() + "\n"))?;
    }
    write_text(&args.out_dir.join(RESULTS_FILE), &results_table(std::slice::from_ref(&report)))?;

    let mut inputs = store::record_files(&args.store.join(store::EPISODES_DIR))?;
    inputs.push(args.store.join(store::LABELS_FILE));
    inputs.push(args.store.join(store::STATS_FILE));
    let mut flags = flags_json(args)?;
    flags["resolved_variant"] = variant.name().into();
    RunManifest {
        command: "train".into(),
        args: recorded,
        flags,
        seed: Some(args.seed),
        dataset_digest: manifest::digest_files(&inputs)?,
        artifact_version: manifest::ARTIFACT_VERSION.into(),
    }
    .write(&args.out_dir.join("manifest.json"))
}

fn load_model(path: &Path) -> Result<(ModelFile, FittedPreprocessor)> {
    let file = ModelFile::from_json(&read_text(path)?).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })?;
    let pre = file.preprocessor.clone().ok_or_else(|| CliError::Model {
        path: path.to_path_buf(),
        source: ModelError::ModelFile("no preprocessing statistics embedded".into()),
    })?;
    Ok((file, pre))
}

fn output_manifest(out: &Path, command: &str, flags: serde_json::Value, recorded: Vec<String>, inputs: &[PathBuf]) -> Result<()> {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    RunManifest {
        command: command.into(),
        args: recorded,
        flags,
        seed: None,
        dataset_digest: manifest::digest_files(inputs)?,
        artifact_version: manifest::ARTIFACT_VERSION.into(),
    }
    .write(&out.with_file_name(name))
}

pub fn cmd_predict(args: &PredictArgs, recorded: Vec<String>) -> Result<()> {
    let (model, pre) = load_model(&args.model)?;
    let mut out = String::from("record_id\trisk\n");
    for path in &args.episodes {
        let ep = store::load_record(path)?;
        let x = pre.transform(&ep)?;
        let risk = predict(&model.params, &x.matrix).map_err(|source| CliError::Model {
            path: path.clone(),
            source,
        })?;
        out.push_str(&format!("{}\t{}\n", ep.record_id, risk));
    }
    write_text(&args.out, &out)?;
    let inputs: Vec<PathBuf> = std::iter::once(args.model.clone()).chain(args.episodes.clone()).collect();
    output_manifest(&args.out, "predict", flags_json(args)?, recorded, &inputs)
}

pub fn cmd_attention(args: &AttentionArgs, recorded: Vec<String>) -> Result<()> {
    let (model, pre) = load_model(&args.model)?;
    if model.params.config.pooling != Pooling::Attention {
        return Err(CliError::Model {
            path: args.model.clone(),
            source: ModelError::NoAttention,
        });
    }
    let mut out = String::from("record_id\thead\tinterval\tprobability\n");
    let mut states = String::from("record_id\tinterval\tstate\n");
    for path in &args.episodes {
        let ep = store::load_record(path)?;
        let x = pre.transform(&ep)?;
        let trace = attention_trace(&model.params, ep.record_id, &x.matrix).map_err(|source| CliError::Model {
            path: path.clone(),
            source,
        })?;
        for (r, row) in trace.attention.iter().enumerate() {
            for (t, a) in row.iter().enumerate() {
                out.push_str(&format!("{}\t{}\t{}\t{}\n", trace.record_id, r, t, a));
            }
        }
        for t in 0..trace.states.rows() {
            let s: Vec<String> = trace.states.row(t).iter().map(|v| v.to_string()).collect();
            states.push_str(&format!("{}\t{}\t{}\n", trace.record_id, t, s.join(",")));
        }
    }
    write_text(&args.out, &out)?;
    if let Some(path) = &args.states {
        write_text(path, &states)?;
    }
    let inputs: Vec<PathBuf> = std::iter::once(args.model.clone()).chain(args.episodes.clone()).collect();
    output_manifest(&args.out, "attention", flags_json(args)?, recorded, &inputs)
}
