mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use uhreval::curation::ShortSideRule;
use uhreval::jpeg::Subsampling;
use uhreval::report::Metric;

/// Texture-richness metrics and dataset tooling for ultra-high-resolution
/// images.
#[derive(Debug, Parser)]
#[command(name = "uhreval", version)]
pub struct Cli {
    /// Worker threads (defaults to the number of hardware threads).
    #[arg(long, global = true, env = "UHREVAL_THREADS")]
    threads: Option<usize>,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, env = "UHREVAL_LOG", default_value = "warn")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every image in a directory or manifest.
    Score(ScoreArgs),
    /// Per-metric win rates of report A against report B.
    Compare(CompareArgs),
    /// Write the four Haar subbands of an image as PNGs.
    Wavelet(WaveletArgs),
    /// Manifest statistics, filtering, captioning and review.
    Curate(CurateArgs),
    /// Rank and linear correlation between a metric and human ratings.
    Correlate(CorrelateArgs),
    /// Frechet distance between two feature sets or moment files.
    Fid(FidArgs),
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Image directory or JSONL manifest.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, env = "UHREVAL_PATCH_SIZE", default_value_t = 64)]
    patch_size: usize,
    #[arg(long, env = "UHREVAL_GRAY_LEVELS", default_value_t = 64)]
    gray_levels: usize,
    #[arg(long, env = "UHREVAL_JPEG_QUALITY", default_value_t = 95)]
    jpeg_quality: u8,
    #[arg(long, env = "UHREVAL_SUBSAMPLING", default_value = "4:4:4")]
    subsampling: Subsampling,
    /// Report JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Scatter data of glcm_score against compression_ratio.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// JSON file of externally computed fid / clipscore / aesthetics.
    #[arg(long)]
    holistic: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WaveletArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct CurateArgs {
    #[command(subcommand)]
    action: CurateAction,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    Exceeds,
    AtLeast,
}

impl From<RuleArg> for ShortSideRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Exceeds => ShortSideRule::Exceeds,
            RuleArg::AtLeast => ShortSideRule::AtLeast,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    /// Offline placeholder captions.
    Stub,
    /// Chat-completion endpoint from UHREVAL_CAPTION_* or --config.
    Http,
}

#[derive(Debug, Subcommand)]
enum CurateAction {
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        /// Also report the share of records above this short side.
        #[arg(long)]
        min_short_side: Option<u32>,
        #[arg(long, value_enum, default_value = "exceeds")]
        rule: RuleArg,
    },
    Filter {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, env = "UHREVAL_MIN_SHORT_SIDE")]
        min_short_side: u32,
        #[arg(long, value_enum, default_value = "exceeds")]
        rule: RuleArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Caption {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, env = "UHREVAL_CAPTION_BACKEND", default_value = "stub")]
        backend: BackendArg,
        /// JSON backend config; overrides the environment.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        /// Re-caption records that already have a caption.
        #[arg(long)]
        overwrite: bool,
    },
    Approve {
        #[arg(long)]
        manifest: PathBuf,
        /// Record path as written in the manifest.
        #[arg(long)]
        path: String,
        /// Mark as rejected instead of approved.
        #[arg(long)]
        reject: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// CSV with `path` and `rating` columns.
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long, default_value = "glcm_score")]
    metric: Metric,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Args)]
struct FidArgs {
    #[arg(long)]
    features_a: PathBuf,
    #[arg(long)]
    features_b: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uhreval: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
