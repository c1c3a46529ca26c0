//! Argument model and subcommand implementations behind the `hoigym`
//! binary. Every flag can also be set through an environment variable
//! named `HOIGYM_<FLAG>` (upper case, dashes as underscores).

mod commands;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hoigym::engine::{EpisodeOptions, Thresholds, DEFAULT_LEAD_FRAMES};
use serde::Serialize;

pub use commands::run;

/// Exit code for runtime failures; usage errors exit with 2.
pub const EXIT_FAILURE: i32 = 1;

/// Error kind for a closed stdout, e.g. when piped into `head`; not a failure.
pub const BROKEN_PIPE: &str = "broken_pipe";

#[derive(Debug, Parser)]
#[command(name = "hoigym", version, about = "Closed-loop dynamic hand-object capture gym")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect an oracle dataset into per-episode archives plus a manifest.
    Generate(GenerateArgs),
    /// Serve evaluation sessions over TCP.
    Serve(ServeArgs),
    /// Roll out the scripted oracle and print its metrics.
    EvalOracle(EvalArgs),
    /// Roll out a scripted comparison agent and print its metrics.
    EvalScripted(ScriptedArgs),
    /// Print an archived episode frame by frame.
    Replay(ReplayArgs),
    /// Action statistics, histograms and outlier filtering for a corpus.
    Stats(StatsArgs),
    /// Stratified tables from a report file or an archive corpus.
    Report(ReportArgs),
}

/// Flags shared by every command that builds episodes.
#[derive(Debug, Clone, Args, Serialize)]
pub struct EpisodeArgs {
    /// Motion catalog (TOML); the built-in catalog when omitted.
    #[arg(long, env = "HOIGYM_CATALOG")]
    pub catalog: Option<PathBuf>,
    /// Frames the hand observes before acting.
    #[arg(long, env = "HOIGYM_OBS_FRAMES", default_value_t = 10)]
    pub obs_frames: usize,
    /// Localization threshold in metres.
    #[arg(long, env = "HOIGYM_THRESHOLD", default_value_t = 0.3, value_parser = positive)]
    pub threshold: f64,
    /// Lenient localization threshold in metres.
    #[arg(long, env = "HOIGYM_LENIENT", default_value_t = 1.0, value_parser = positive)]
    pub lenient: f64,
    /// Logging jitter sigma in frames; bare `--jitter` uses 0.2.
    #[arg(long, env = "HOIGYM_JITTER", num_args = 0..=1, default_missing_value = "0.2", value_parser = non_negative)]
    pub jitter: Option<f64>,
    /// Upper bound on episode length in frames.
    #[arg(long, env = "HOIGYM_HORIZON", value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: Option<u64>,
}

impl EpisodeArgs {
    pub fn options(&self) -> EpisodeOptions {
        EpisodeOptions {
            obs_frames: self.obs_frames,
            lead_frames: DEFAULT_LEAD_FRAMES,
            thresholds: Thresholds { loc: self.threshold, lenient: self.lenient },
            jitter_sigma: self.jitter,
            horizon: self.horizon.map(|h| h as usize),
        }
    }
}

/// Which episodes to run.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    /// Subcategories to draw from (comma separated or repeated); all when omitted.
    #[arg(long, env = "HOIGYM_SUBCATEGORY", value_delimiter = ',')]
    pub subcategory: Vec<String>,
    #[arg(long, env = "HOIGYM_EPISODES", default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub episodes: u64,
    #[arg(long, env = "HOIGYM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Extra generation attempts per episode.
    #[arg(long, env = "HOIGYM_RETRIES", default_value_t = 3)]
    pub retries: usize,
    /// Worker threads; all cores when omitted.
    #[arg(long, env = "HOIGYM_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub select: SelectArgs,
    #[command(flatten)]
    pub episode: EpisodeArgs,
    /// Output directory for archives and manifest.json.
    #[arg(long, env = "HOIGYM_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub episode: EpisodeArgs,
    #[arg(long, env = "HOIGYM_BIND", default_value = "127.0.0.1:7878")]
    pub bind: String,
    /// Session deadline in seconds.
    #[arg(long, env = "HOIGYM_DEADLINE", default_value_t = 300.0, value_parser = positive)]
    pub deadline: f64,
    /// Exit after this many sessions; serve forever when omitted.
    #[arg(long, env = "HOIGYM_SESSIONS")]
    pub sessions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub select: SelectArgs,
    #[command(flatten)]
    pub episode: EpisodeArgs,
    /// Write per-episode reports as JSON to this file.
    #[arg(long, env = "HOIGYM_OUT")]
    pub out: Option<PathBuf>,
    /// Print one row per episode before the summary.
    #[arg(long)]
    pub per_episode: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agent {
    Zero,
    Chaser,
    Extrapolator,
}

#[derive(Debug, Args)]
pub struct ScriptedArgs {
    #[arg(long, env = "HOIGYM_AGENT", value_enum)]
    pub agent: Agent,
    #[command(flatten)]
    pub eval: EvalArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// An `episode_<id>` archive directory.
    pub path: PathBuf,
    /// Only print frames from this index on.
    #[arg(long, default_value_t = 0)]
    pub from: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus root holding `episode_<id>` archives.
    pub path: PathBuf,
    #[arg(long, env = "HOIGYM_BINS", default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    /// Write action_stats.json, histograms.csv, corpus.csv and filter.json here.
    #[arg(long, env = "HOIGYM_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON written by an eval command, or a corpus root of archives.
    pub path: PathBuf,
    /// Draw this many episodes per periodicity stratum for inspection.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, env = "HOIGYM_SEED", default_value_t = 0)]
    pub seed: u64,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a non-negative number")),
    }
}

/// A runtime failure, reported as one JSON line on stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    /// `{"error":"<kind>","message":"..."}` on a single line.
    pub fn to_line(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}
