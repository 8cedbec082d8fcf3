//! `rfsynth` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or IO failure, 2 usage or configuration
//! error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::channel::ChannelProfile;
use crate::constellations::{build_constellation, Modulation};
use crate::dataset::{write_dataset, DatasetReader, Task, TaskPreset, PRESET_NAMES};
use crate::metrics::{
    class_labels, class_truth, demod_truth, oracle_demod, read_predictions, regression_truth,
    score_classification, score_demod, score_regression, write_predictions, OracleMode, Payload,
    PredictionRecord, DEFAULT_BIN_WIDTH_DB,
};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "rfsynth",
    version,
    about = "RF baseband dataset synthesizer and channel simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an RFDS dataset file plus a JSON manifest.
    Generate(GenerateArgs),
    /// Print a dataset header, or one example's labels and samples.
    Inspect(InspectArgs),
    /// Score a prediction CSV against a dataset.
    Score(ScoreArgs),
    /// Run the matched-filter demodulator over a demod dataset.
    Oracle(OracleArgs),
    /// Show the built-in channel profiles as JSON.
    Profiles {
        /// Profile to print; all when omitted.
        name: Option<String>,
    },
    /// Show the built-in task presets as JSON.
    Presets { name: Option<String> },
    /// Print the constellation coordinate table.
    Constellations {
        #[arg(long, value_enum, default_value_t = TableFormat::Markdown)]
        format: TableFormat,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableFormat {
    Markdown,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Built-in preset name.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<String>,
    /// JSON file holding a full task preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of examples to write (default: the whole split).
    #[arg(long)]
    pub count: Option<u64>,
    #[arg(long, value_enum, default_value_t = Split::Train)]
    pub split: Split,
    /// Override the profile's lower SNR bound (dB).
    #[arg(long, allow_hyphen_values = true)]
    pub snr_min: Option<f64>,
    /// Override the profile's upper SNR bound (dB).
    #[arg(long, allow_hyphen_values = true)]
    pub snr_max: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Manifest path (default: `<out>.manifest.json`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub path: PathBuf,
    /// Record position within the file.
    #[arg(long)]
    pub index: Option<u64>,
    /// Write the example's Tx/Rx samples as CSV.
    #[arg(long, requires = "index")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Expected task; must match the dataset.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH_DB)]
    pub bin_width: f64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Corrected)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Corrected,
    Raw,
}

impl From<ModeArg> for OracleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Corrected => OracleMode::Corrected,
            ModeArg::Raw => OracleMode::Raw,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownPreset { .. }
            | Error::InvalidPreset(_)
            | Error::UnknownProfile(_)
            | Error::UnsupportedModulation(_)
            | Error::TaskMismatch { .. }
            | Error::IndexOutOfRange { .. }
            | Error::IndexMismatch(_)
            | Error::PayloadMismatch { .. }
            | Error::BadPrediction { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Runtime(err) => eprintln!("error: {err:#}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs one subcommand and returns its stdout text.
pub fn execute(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Inspect(args) => cmd_inspect(&args),
        Command::Score(args) => cmd_score(&args),
        Command::Oracle(args) => cmd_oracle(&args),
        Command::Profiles { name } => cmd_profiles(name.as_deref()),
        Command::Presets { name } => cmd_presets(name.as_deref()),
        Command::Constellations { format } => Ok(constellation_table(format)),
    }
}

fn load_preset(args: &GenerateArgs) -> CliResult<TaskPreset> {
    let mut preset = match (&args.preset, &args.config) {
        (Some(name), _) => TaskPreset::by_name(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?
        }
        (None, None) => return Err(CliError::Usage("--preset or --config is required".into())),
    };
    if let Some(lo) = args.snr_min {
        preset.profile.snr_range[0] = lo;
    }
    if let Some(hi) = args.snr_max {
        preset.profile.snr_range[1] = hi;
    }
    preset.validate()?;
    Ok(preset)
}

#[derive(Serialize)]
struct Manifest<'a> {
    dataset: String,
    base_seed: u64,
    split: &'a str,
    first_index: u64,
    example_count: u64,
    frame_length: usize,
    bytes: u64,
    duration_ms: u128,
    preset: &'a TaskPreset,
}

fn cmd_generate(args: &GenerateArgs) -> CliResult<String> {
    let preset = load_preset(args)?;
    let (first, available) = match args.split {
        Split::Train => (0, preset.train_count),
        Split::Val => (preset.train_count, preset.val_count),
    };
    let count = args.count.unwrap_or(available);
    if count > available {
        return Err(CliError::Usage(format!(
            "--count {count} exceeds the {available} examples in this split"
        )));
    }
    let started = Instant::now();
    let header = write_dataset(&args.out, &preset, args.seed, first, count, args.threads)?;
    let elapsed = started.elapsed();
    let bytes = fs::metadata(&args.out)
        .with_context(|| format!("stat {}", args.out.display()))?
        .len();
    let manifest = Manifest {
        dataset: args.out.display().to_string(),
        base_seed: args.seed,
        split: match args.split {
            Split::Train => "train",
            Split::Val => "val",
        },
        first_index: header.first_index,
        example_count: header.example_count,
        frame_length: header.frame_length,
        bytes,
        duration_ms: elapsed.as_millis(),
        preset: &preset,
    };
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".manifest.json"));
    let json = serde_json::to_string_pretty(&manifest).context("serializing manifest")?;
    fs::write(&manifest_path, json + "\n")
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(format!(
        "wrote {} examples ({} bytes) to {} in {:.2}s\n",
        count,
        bytes,
        args.out.display(),
        elapsed.as_secs_f64()
    ))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_inspect(args: &InspectArgs) -> CliResult<String> {
    let mut reader = DatasetReader::open(&args.path)?;
    let h = reader.header().clone();
    let mut out = String::new();
    writeln!(out, "file: {}", args.path.display()).unwrap();
    writeln!(out, "format_version: {}", h.format_version).unwrap();
    writeln!(out, "preset: {} (task {})", h.preset.name, h.preset.task).unwrap();
    writeln!(out, "profile: {}", h.preset.profile.name).unwrap();
    writeln!(out, "base_seed: {}", h.base_seed).unwrap();
    writeln!(out, "first_index: {}", h.first_index).unwrap();
    writeln!(out, "example_count: {}", h.example_count).unwrap();
    writeln!(out, "frame_length: {}", h.frame_length).unwrap();
    let Some(index) = args.index else {
        return Ok(out);
    };
    let ex = reader.get(index)?;
    let ch = &ex.channel;
    writeln!(out, "--- record {index} (example {})", ex.index).unwrap();
    writeln!(out, "example_seed: {}", ex.example_seed).unwrap();
    writeln!(
        out,
        "modulation: {} (id {})",
        ex.modulation,
        ex.modulation.id()
    )
    .unwrap();
    writeln!(out, "n_symbols: {}", ex.n_symbols).unwrap();
    writeln!(out, "sps: {}", ex.sps).unwrap();
    writeln!(out, "beta: {}", ex.beta).unwrap();
    writeln!(out, "phase_offset_rad: {}", ch.phase_offset).unwrap();
    writeln!(out, "freq_offset: {}", ch.freq_offset).unwrap();
    writeln!(out, "snr_db: {}", ch.snr_db).unwrap();
    writeln!(
        out,
        "fading: {} (eta {}, seed {})",
        ch.fading_enabled, ch.fading_eta, ch.fading_seed
    )
    .unwrap();
    let bits: String = ex.bits.iter().map(|b| char::from(b'0' + b)).collect();
    writeln!(out, "bits: {bits}").unwrap();
    if let Some(path) = &args.csv {
        let mut csv = String::from("n,tx_i,tx_q,rx_i,rx_q\n");
        for (n, (t, r)) in ex.tx.samples.iter().zip(&ex.rx.samples).enumerate() {
            writeln!(csv, "{n},{},{},{},{}", t.re, t.im, r.re, r.im).unwrap();
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
        writeln!(out, "samples written to {}", path.display()).unwrap();
    }
    Ok(out)
}

fn cmd_score(args: &ScoreArgs) -> CliResult<String> {
    let reader = DatasetReader::open(&args.dataset)?;
    let preset = reader.header().preset.clone();
    if let Some(task) = &args.task {
        let wanted: Task = task
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown task `{task}`")))?;
        if wanted != preset.task {
            return Err(Error::TaskMismatch {
                expected: wanted.to_string(),
                found: format!("{} (dataset)", preset.task),
            }
            .into());
        }
    }
    let preds = read_predictions(&args.predictions)?;
    if let Some(p) = preds.iter().find(|p| p.task != preset.task) {
        return Err(Error::TaskMismatch {
            expected: preset.task.to_string(),
            found: format!("{} (prediction for example {})", p.task, p.example_index),
        }
        .into());
    }
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let write = |name: &str, text: String| -> CliResult<()> {
        let path = args.out_dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    };

    let summary = match preset.task {
        Task::Amc | Task::SymbolCount => {
            let truth = reader
                .iter()?
                .map(|ex| ex.map(|ex| class_truth(&ex, &preset).expect("classification task")))
                .collect::<crate::Result<Vec<_>>>()?;
            let s = score_classification(&preds, &truth, class_labels(&preset), args.bin_width)?;
            write("confusion.csv", s.confusion.to_csv())?;
            write("curve.csv", s.curve.to_csv())?;
            s.summary()
        }
        Task::Regression => {
            let truth = reader
                .iter()?
                .map(|ex| ex.map(|ex| regression_truth(&ex)))
                .collect::<crate::Result<Vec<_>>>()?;
            let s = score_regression(&preds, &truth)?;
            write("scatter.csv", s.scatter_csv())?;
            s.summary()
        }
        Task::Demod => {
            let truth = reader
                .iter()?
                .map(|ex| ex.map(|ex| demod_truth(&ex)))
                .collect::<crate::Result<Vec<_>>>()?;
            let s = score_demod(&preds, &truth, args.bin_width)?;
            write("curve.csv", s.curves_csv())?;
            s.summary()
        }
    };
    let summary = format!("task: {}\n{summary}", preset.task);
    write("summary.txt", summary.clone())?;
    Ok(summary)
}

fn cmd_oracle(args: &OracleArgs) -> CliResult<String> {
    let reader = DatasetReader::open(&args.dataset)?;
    let preset = reader.header().preset.clone();
    if preset.task != Task::Demod {
        return Err(Error::TaskMismatch {
            expected: Task::Demod.to_string(),
            found: preset.task.to_string(),
        }
        .into());
    }
    let mode = OracleMode::from(args.mode);
    let mut records = Vec::with_capacity(reader.len() as usize);
    for ex in reader.iter()? {
        let ex = ex?;
        let syms = oracle_demod(&ex, preset.span, mode)?;
        records.push(PredictionRecord::new(
            ex.index,
            Task::Demod,
            Payload::Symbols(syms),
        )?);
    }
    write_predictions(&args.out, &records)?;
    Ok(format!(
        "wrote {} predictions to {}\n",
        records.len(),
        args.out.display()
    ))
}

fn cmd_profiles(name: Option<&str>) -> CliResult<String> {
    let profiles = match name {
        Some(n) => vec![ChannelProfile::by_name(n)?],
        None => vec![
            ChannelProfile::harsh(),
            ChannelProfile::medium(),
            ChannelProfile::mild(),
        ],
    };
    let json = if profiles.len() == 1 {
        serde_json::to_string_pretty(&profiles[0])
    } else {
        serde_json::to_string_pretty(&profiles)
    }
    .context("serializing profiles")?;
    Ok(json + "\n")
}

fn cmd_presets(name: Option<&str>) -> CliResult<String> {
    match name {
        Some(n) => {
            let p = TaskPreset::by_name(n)?;
            Ok(serde_json::to_string_pretty(&p).context("serializing preset")? + "\n")
        }
        None => Ok(PRESET_NAMES.join("\n") + "\n"),
    }
}

/// Exact coordinate table of every alphabet.
pub fn constellation_table(format: TableFormat) -> String {
    match format {
        TableFormat::Json => {
            let table = crate::dataset::ConstellationEntry::table();
            serde_json::to_string_pretty(&table).expect("table serializes") + "\n"
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            for m in Modulation::ALL {
                let c = build_constellation(m);
                writeln!(
                    out,
                    "## {} (id {}, {} bits/symbol)\n\n| index | bits | I | Q |\n|---|---|---|---|",
                    m.name(),
                    m.id(),
                    m.bits_per_symbol()
                )
                .unwrap();
                for (k, (p, l)) in c.points.iter().zip(&c.bit_labels).enumerate() {
                    writeln!(
                        out,
                        "| {k} | {:0width$b} | {:.17} | {:.17} |",
                        l,
                        p.re,
                        p.im,
                        width = m.bits_per_symbol()
                    )
                    .unwrap();
                }
                out.push('\n');
            }
            out
        }
    }
}
