use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use crate::commands;
use crate::io::{EventFormat, IoError};

/// Version of every JSON report and summary this tool writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Failure of one command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration or arguments: exit 2.
    #[error("config error: {0}")]
    Config(String),
    /// Malformed input data: exit 3.
    #[error("parse error: {0}")]
    Parse(String),
    /// Filesystem failure: exit 1.
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Parse(_) => 3,
        }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        if e.is_parse() {
            CliError::Parse(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    #[default]
    Json,
}

impl ReportFormat {
    pub fn ext(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "evpipe", version, about = "Event-camera velocimetry, motion capture and camera tuning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory; created if missing.
    #[arg(long)]
    pub output: PathBuf,
    /// Format of tabular outputs.
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sparse flow field from a smoke event stream.
    Velocimetry {
        #[arg(long)]
        input: PathBuf,
        /// Grid configuration (JSON); defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Marker poses from a blinking-LED event stream.
    Mocap {
        #[arg(long)]
        input: PathBuf,
        /// Marker map (JSON list of {id, xyz_m, freq_hz, duty}).
        #[arg(long)]
        markers: PathBuf,
        /// Camera intrinsics (JSON).
        #[arg(long)]
        camera: PathBuf,
        /// Pipeline settings (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Tracker seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Synthetic event stream and ground-truth sidecar from a scene spec.
    Synth {
        /// Scene spec (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Event file encoding.
        #[arg(long, value_enum, default_value_t = EventFormat::Binary)]
        events_format: EventFormat,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Particle-swarm bias tuning on a simulated LED scene.
    Autotune {
        /// Tuning spec (JSON): LED scene and swarm settings.
        #[arg(long)]
        config: PathBuf,
        /// Bias bounds (JSON); the built-in ranges if omitted.
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides the iteration cap of the spec.
        #[arg(long)]
        max_iters: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Disturbance spectra, AR models and position maps.
    Disturbance {
        #[command(subcommand)]
        action: DisturbanceAction,
    },
    /// Per-stage timings.
    Bench {
        #[arg(long, value_enum)]
        suite: commands::bench::Suite,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum DisturbanceAction {
    /// Welch PSD and Yule-Walker AR model of a sampled signal.
    FitAr {
        /// Signal CSV with a `value` column.
        #[arg(long)]
        input: PathBuf,
        /// {order, fs_hz, welch: {segment, overlap}} (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Synthetic signal from an AR model.
    Generate {
        /// AR model (JSON {order, coeffs, sigma2}).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Discarded warm-up samples; ten per lag if omitted.
        #[arg(long)]
        burn_in: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Ridge-regressed disturbance map from position/wrench samples.
    FitMap {
        /// Sample CSV (y_m, z_m, fy_N, fz_N, taux_Nm).
        #[arg(long)]
        input: PathBuf,
        /// {basis, lambda} (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("evpipe: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Velocimetry { input, config, out } => commands::velocimetry::run(&input, config.as_deref(), &out),
        Command::Mocap {
            input,
            markers,
            camera,
            config,
            seed,
            out,
        } => commands::mocap::run(&input, &markers, &camera, config.as_deref(), seed, &out),
        Command::Synth {
            config,
            seed,
            events_format,
            out,
        } => commands::synth::run(&config, seed, events_format, &out),
        Command::Autotune {
            config,
            bounds,
            seed,
            max_iters,
            out,
        } => commands::autotune::run(&config, bounds.as_deref(), seed, max_iters, &out),
        Command::Disturbance { action } => commands::disturbance::run(action),
        Command::Bench { suite, reps, out } => commands::bench::run(suite, reps, &out),
    }
}

/// Deserialize a JSON config file; unreadable files are I/O errors, bad
/// content is a config error.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn load_json_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    path.map_or_else(|| Ok(T::default()), load_json)
}

/// Create the output directory and return the path of `name` inside it.
pub fn out_file(out: &OutArgs, name: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&out.output).map_err(|e| CliError::Io(format!("{}: {e}", out.output.display())))?;
    Ok(out.output.join(name))
}
