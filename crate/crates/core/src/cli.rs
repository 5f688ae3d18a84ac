//! Command-line front end: `features`, `train`, `predict`, `evaluate`,
//! `compare` and `synth`.
//!
//! Exit codes are 0 on success, 1 for data or validation errors and 2 for
//! usage errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::TypedValueParser as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::dataio;
use crate::estimators::{self, Method, CLAMP_RANGE};
use crate::features::{extract_features, FeatureConfig, DEFAULT_DELTA};
use crate::metrics::evaluate;
use crate::model::MetricsReport;
use crate::synth::{self, GenParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }

    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hrbase", version, about = "Adaptive-baseline heart-rate estimation from face tracks and age")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute per-video AMA and aggregated age
    Features(FeaturesArgs),
    /// Fit one of the four baselines
    Train(TrainArgs),
    /// Apply a fitted model to a features file
    Predict(PredictArgs),
    /// Score predictions against ground truth
    Evaluate(EvaluateArgs),
    /// Score several prediction files and rank them by MAE
    Compare(CompareArgs),
    /// Write a seeded synthetic dataset
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long)]
    ages: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DELTA, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    delta: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    /// bc, bage, bmotion or bam
    #[arg(long)]
    method: Method,
    #[arg(long)]
    model_out: PathBuf,
    /// Motion offset the features were computed with; stored in the model.
    #[arg(long, default_value_t = DEFAULT_DELTA, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    delta: usize,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Bound predictions to [40, 240] bpm.
    #[arg(long)]
    clamp: bool,
    /// Motion offset of these features; a mismatch with the model only warns.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    delta: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    meta: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    pred: Vec<PathBuf>,
    /// One label per prediction file; defaults to the file stems.
    #[arg(long, num_args = 1..)]
    labels: Vec<String>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    videos: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = GenParams::default().a, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, default_value_t = GenParams::default().b, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, default_value_t = GenParams::default().c, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, default_value_t = GenParams::default().sigma)]
    sigma: f64,
    #[arg(long, default_value_t = GenParams::default().m_max)]
    m_max: f64,
    #[arg(long, default_value_t = GenParams::default().age_jitter)]
    age_jitter: f64,
    #[arg(long, default_value_t = GenParams::default().frame_count)]
    frame_count: usize,
    #[arg(long, default_value_t = GenParams::default().fps)]
    fps: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: usize,
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Features(a) => cmd_features(&a, out, err),
        Command::Train(a) => cmd_train(&a, out),
        Command::Predict(a) => cmd_predict(&a, err),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

fn cmd_features(args: &FeaturesArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let tracks = dataio::load_tracks(&args.tracks).map_err(CliError::data)?;
    let metas = dataio::load_meta(&args.meta).map_err(CliError::data)?;
    let ages = match &args.ages {
        Some(p) => dataio::load_ages(p).map_err(CliError::data)?,
        None => Vec::new(),
    };
    let config = FeatureConfig::with_delta(args.delta);

    let mut rows = Vec::with_capacity(tracks.len());
    let mut failures = Vec::new();
    for (video_id, result) in extract_features(&tracks, &ages, &metas, &config) {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((video_id, e)),
        }
    }
    if !failures.is_empty() {
        for (_, e) in &failures {
            let _ = writeln!(err, "{e}");
        }
        return Err(CliError::Data(format!(
            "feature extraction failed for {} of {} videos",
            failures.len(),
            tracks.len()
        )));
    }
    dataio::write_features(&rows, &args.out).map_err(CliError::data)?;
    let _ = writeln!(out, "wrote {} feature rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let rows = dataio::load_features(&args.features).map_err(CliError::data)?;
    let model = estimators::fit(args.method, &rows, args.delta).map_err(CliError::data)?;
    dataio::save_model(&model, &args.model_out).map_err(CliError::data)?;
    let _ = write!(out, "{}", estimators::describe(&model));
    Ok(())
}

fn cmd_predict(args: &PredictArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let rows = dataio::load_features(&args.features).map_err(CliError::data)?;
    let model = dataio::load_model(&args.model).map_err(CliError::data)?;
    if let Some(delta) = args.delta {
        if delta != model.delta {
            let _ = writeln!(
                err,
                "warning: features use delta={delta} but the model was trained with delta={}",
                model.delta
            );
        }
    }
    let mut preds = estimators::predict(&model, &rows).map_err(CliError::data)?;
    if args.clamp {
        estimators::clamp_predictions(&mut preds, CLAMP_RANGE);
    }
    dataio::write_predictions(&preds, &args.out).map_err(CliError::data)
}

// Two decimals, never "-0.00".
fn two_decimals(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn score(pred: &Path, metas: &[crate::model::VideoMeta]) -> Result<MetricsReport, CliError> {
    let preds = dataio::load_predictions(pred).map_err(CliError::data)?;
    evaluate(&preds, metas).map_err(|e| CliError::Data(format!("{}: {e}", pred.display())))
}

fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let metas = dataio::load_meta(&args.meta).map_err(CliError::data)?;
    let report = score(&args.pred, &metas)?;
    let (mae, rmse, r) = (
        two_decimals(report.mae),
        two_decimals(report.rmse),
        two_decimals(report.pearson_r),
    );
    let _ = match args.format {
        ReportFormat::Text => writeln!(out, "MAE:  {mae} bpm\nRMSE: {rmse} bpm\nR:    {r}\nn:    {}", report.n),
        ReportFormat::Csv => writeln!(out, "mae,rmse,r,n\n{mae},{rmse},{r},{}", report.n),
    };
    Ok(())
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let labels: Vec<String> = if args.labels.is_empty() {
        args.pred
            .iter()
            .map(|p| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string())
            })
            .collect()
    } else {
        args.labels.clone()
    };
    if labels.len() != args.pred.len() {
        return Err(CliError::Usage(format!(
            "{} labels given for {} prediction files",
            labels.len(),
            args.pred.len()
        )));
    }
    let mut unique = BTreeSet::new();
    if let Some(dup) = labels.iter().find(|l| !unique.insert(l.as_str())) {
        return Err(CliError::Usage(format!(
            "duplicate label '{dup}'; pass distinct --labels"
        )));
    }

    let metas = dataio::load_meta(&args.meta).map_err(CliError::data)?;
    let mut table = Vec::with_capacity(labels.len());
    for (label, path) in labels.into_iter().zip(&args.pred) {
        table.push((label, score(path, &metas)?));
    }
    table.sort_by(|(la, a), (lb, b)| a.mae.total_cmp(&b.mae).then_with(|| la.cmp(lb)));

    match args.format {
        ReportFormat::Text => {
            let width = table.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
            let _ = writeln!(
                out,
                "{:>4}  {:<width$}  {:>8}  {:>8}  {:>6}  {:>6}",
                "rank", "method", "MAE", "RMSE", "R", "n"
            );
            for (i, (label, r)) in table.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{:>4}  {:<width$}  {:>8}  {:>8}  {:>6}  {:>6}",
                    i + 1,
                    label,
                    two_decimals(r.mae),
                    two_decimals(r.rmse),
                    two_decimals(r.pearson_r),
                    r.n
                );
            }
        }
        ReportFormat::Csv => {
            let _ = writeln!(out, "rank,label,mae,rmse,r,n");
            for (i, (label, r)) in table.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    i + 1,
                    label,
                    two_decimals(r.mae),
                    two_decimals(r.rmse),
                    two_decimals(r.pearson_r),
                    r.n
                );
            }
        }
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = GenParams {
        a: args.a,
        b: args.b,
        c: args.c,
        sigma: args.sigma,
        m_max: args.m_max,
        age_jitter: args.age_jitter,
        frame_count: args.frame_count,
        fps: args.fps,
        delta: args.delta,
    };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    synth::write_dataset(args.seed, args.videos, &params, &args.out).map_err(CliError::data)?;
    let _ = writeln!(
        out,
        "wrote {} synthetic videos (seed {}) to {}",
        args.videos,
        args.seed,
        args.out.display()
    );
    Ok(())
}
