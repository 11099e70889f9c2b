//! `poremine` — segment fibrous-material micrographs, extract pore
//! shape features, and mine the pore population for artifact clusters.
//!
//! Exit codes: 0 success, 2 I/O or malformed input data, 3 invalid
//! arguments or bad config/spec files, 4 analytic degeneracy (for
//! example a constant feature column).

mod commands;
mod config;
mod outputs;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use config::ConfigFile;

/// An error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    /// Exit 2: unreadable, unwritable, or malformed files.
    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    /// Exit 3: invalid arguments, config, or spec values.
    pub fn args(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    /// Exit 4: the data admits no meaningful analysis.
    pub fn degenerate(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "poremine",
    version,
    about = "Pore characterization and artifact mining for fibrous-material micrographs"
)]
struct Cli {
    /// Config file with `key=value` lines supplying flag defaults
    /// (flags win over the file, the file wins over built-ins).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Cap on worker threads [default: all cores].
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold a grayscale micrograph into a pore/fiber mask.
    Segment(SegmentArgs),
    /// Extract pores from a mask and write their shape features.
    Pores(PoresArgs),
    /// Cluster pore features and report artifact concentration.
    Mine(MineArgs),
    /// Generate a synthetic micrograph with ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SegmentArgs {
    /// Input micrograph: binary PGM or 8-bit grayscale PNG.
    #[arg(long, value_name = "IMAGE")]
    input: PathBuf,
    /// Spatial calibration in µm per pixel (required here or in the
    /// config file).
    #[arg(long, value_name = "UM_PER_PX")]
    scale: Option<f64>,
    /// Fixed threshold: intensities at or below T become pore.
    #[arg(long, value_name = "T", conflicts_with = "auto")]
    threshold: Option<u8>,
    /// Pick the threshold automatically from the histogram [default].
    #[arg(long)]
    auto: bool,
    /// Output mask path (PGM; pore=0, fiber=255).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct PoresArgs {
    /// Input mask: bilevel PGM with pore=0, fiber=255.
    #[arg(long, value_name = "FILE")]
    mask: PathBuf,
    /// Spatial calibration in µm per pixel (required here or in the
    /// config file).
    #[arg(long, value_name = "UM_PER_PX")]
    scale: Option<f64>,
    /// Smallest pixel count that still counts as a pore [default: 10].
    #[arg(long, value_name = "N")]
    min_pixels: Option<usize>,
    /// Output feature CSV path.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

/// Cluster count choice: `auto` (elbow rule) or a fixed positive N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    Auto,
    Fixed(usize),
}

impl FromStr for KChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KChoice::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(KChoice::Fixed(k)),
            _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
        }
    }
}

#[derive(Args)]
struct MineArgs {
    /// Feature CSVs produced by `pores` (repeatable).
    #[arg(long = "features", value_name = "CSV", required = true, num_args = 1..)]
    features: Vec<PathBuf>,
    /// Optional label CSV with header image_id,pore_id,label.
    #[arg(long, value_name = "CSV")]
    labels: Option<PathBuf>,
    /// Lower area cutoff in µm²; pores at or above it are kept
    /// [default: 0.4].
    #[arg(long, value_name = "UM2")]
    cutoff: Option<f64>,
    /// Optional upper area cutoff in µm².
    #[arg(long, value_name = "UM2")]
    upper_cutoff: Option<f64>,
    /// Cluster count: `auto` for the elbow rule or a fixed N
    /// [default: auto].
    #[arg(long, value_name = "auto|N")]
    k: Option<KChoice>,
    /// Largest k probed by automatic selection [default: 10].
    #[arg(long, value_name = "N")]
    kmax: Option<usize>,
    /// Random seed [default: $POREMINE_SEED, else 0].
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Mask PGMs to render annotated pore maps for; each mask's file
    /// stem must match an image_id in the feature CSVs (repeatable).
    #[arg(long = "mask", value_name = "PGM", num_args = 1..)]
    masks: Vec<PathBuf>,
    /// Smallest pixel count that still counts as a pore when
    /// re-extracting pores from --mask files [default: 10].
    #[arg(long, value_name = "N")]
    min_pixels: Option<usize>,
    /// Directory receiving all CSV and SVG outputs.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Spec file with `key=value` lines; `width` and `height` are
    /// required, everything else has defaults.
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    /// Directory receiving the image, ground-truth mask, and pore CSV.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::empty(),
    };
    let threads = match cli.threads {
        Some(n) => Some(n),
        None => config.get_usize("threads")?,
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::args("--threads must be at least 1"));
        }
        // Ignore failure: the global pool can only exist already when
        // embedded in a test harness, where the cap is advisory.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Segment(args) => commands::segment(args, &config),
        Command::Pores(args) => commands::pores(args, &config),
        Command::Mine(args) => commands::mine(args, &config),
        Command::Synth(args) => commands::synth(args, &config),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
