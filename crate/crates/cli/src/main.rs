//! `ptpp`: R-peak detection, evaluation, detector comparison, stage dumps,
//! timing and synthetic record generation from the command line.

mod commands;
mod error;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ptpp_core::detector::DetectorKind;
use ptpp_core::settings::Settings;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ptpp", version, about = "R-peak detection for ECG records")]
struct Cli {
    /// Settings file of `section.key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one setting, e.g. `--set pipeline.band_high_hz=15`.
    /// Applied after the settings file, in order.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Log progress as well as warnings.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect R-peaks and write `sample_index,time_s,provenance` rows.
    Detect {
        #[command(flatten)]
        input: RecordInput,
        #[arg(long, default_value = "ptpp")]
        detector: DetectorKind,
        /// Output CSV; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Score one detector against reference annotations.
    Eval {
        #[command(flatten)]
        set: RecordSet,
        #[arg(long, default_value = "ptpp")]
        detector: DetectorKind,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Score both detectors on the same records and list the beats on
    /// which they disagree.
    Compare {
        #[command(flatten)]
        set: RecordSet,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Disagreement CSV; defaults to `<out>_disagreements.csv` beside
        /// the metrics file, or is skipped when metrics go to stdout.
        #[arg(long)]
        disagreements: Option<PathBuf>,
    },
    /// Dump every intermediate pipeline signal.
    Stages {
        #[command(flatten)]
        input: RecordInput,
        #[arg(long, default_value = "ptpp")]
        detector: DetectorKind,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Time pipeline plus decision loop, median over repeated runs.
    Bench {
        /// Records to time (WFDB `.hea` or CSV).
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long)]
        channel: Option<String>,
        #[arg(long)]
        fs: Option<f64>,
        /// Detectors to time; both when omitted.
        #[arg(long)]
        detector: Vec<DetectorKind>,
        #[arg(long, default_value_t = ptpp_core::eval::MIN_RUNS)]
        runs: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic record (WFDB and CSV) with its beat annotations.
    Synth {
        /// TOML record description; defaults apply to omitted fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value = "synth")]
        name: String,
    },
}

#[derive(Debug, Args)]
struct RecordInput {
    /// WFDB header (`.hea`, or the record name) or single-column CSV.
    record: PathBuf,
    /// Channel label or zero-based index.
    #[arg(long)]
    channel: Option<String>,
    /// Sampling rate, required for CSV records.
    #[arg(long)]
    fs: Option<f64>,
}

#[derive(Debug, Args)]
struct RecordSet {
    #[arg(required = true)]
    records: Vec<PathBuf>,
    /// Annotation files in record order; by default `<record>.atr` or
    /// `<record>.beats` beside each record.
    #[arg(long, num_args = 1..)]
    annotations: Vec<PathBuf>,
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    fs: Option<f64>,
    #[arg(long, default_value = "local")]
    dataset: String,
    /// Matching tolerance; overrides `eval.tolerance_ms`.
    #[arg(long)]
    tolerance_ms: Option<f64>,
    /// Fill the exec_time_s column. Off by default so that reruns give
    /// identical files.
    #[arg(long)]
    time: bool,
}

fn load_settings(cli: &Cli) -> CliResult<Settings> {
    let mut settings = match &cli.config {
        Some(path) => {
            let path = input::resolve(path);
            let text = std::fs::read_to_string(&path).map_err(|e| {
                CliError::Config(format!("cannot read settings file {}: {e}", path.display()))
            })?;
            Settings::from_flat_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => Settings::default(),
    };
    for o in &cli.overrides {
        settings
            .apply_override(o)
            .map_err(|e| CliError::Config(format!("--set {o}: {e}")))?;
    }
    Ok(settings)
}

fn run(cli: Cli) -> CliResult<()> {
    let mut settings = load_settings(&cli)?;
    match cli.command {
        Command::Detect { input, detector, out } => commands::detect(&input, detector, &settings, out.as_deref()),
        Command::Eval { set, detector, out } => {
            if let Some(t) = set.tolerance_ms {
                settings.eval.tolerance_ms = t;
            }
            commands::eval(&set, &[detector], &settings, out.as_deref(), None)
        }
        Command::Compare { set, out, disagreements } => {
            if let Some(t) = set.tolerance_ms {
                settings.eval.tolerance_ms = t;
            }
            let disagreements = disagreements.or_else(|| {
                out.as_ref().map(|o| {
                    let stem = o.file_stem().unwrap_or_default().to_string_lossy();
                    o.with_file_name(format!("{stem}_disagreements.csv"))
                })
            });
            commands::eval(&set, &DetectorKind::ALL, &settings, out.as_deref(), disagreements.as_deref())
        }
        Command::Stages { input, detector, out } => commands::stages(&input, detector, &settings, out.as_deref()),
        Command::Bench { records, channel, fs, detector, runs, out } => {
            let kinds = if detector.is_empty() { DetectorKind::ALL.to_vec() } else { detector };
            commands::bench(&records, channel.as_deref(), fs, &kinds, runs, &settings, out.as_deref())
        }
        Command::Synth { spec, out_dir, name } => commands::synth(spec.as_deref(), &out_dir, &name),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
