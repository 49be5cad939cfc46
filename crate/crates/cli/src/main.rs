mod commands;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

const LONG_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (build ", env!("EMP_BUILD_HASH"), ")");

#[derive(Parser)]
#[command(name = "emp", version = LONG_VERSION, about = "Effective model pruning: keep the N_eff largest scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prune a score vector read from CSV or JSON.
    PruneScores(PruneScoresArgs),
    /// Retained-mass and loss-change bounds.
    Bounds(BoundsArgs),
    /// Check the closed-form infimum against a brute-force search.
    VerifyGeometry(VerifyArgs),
    /// Featurewise pruning of an 8-bit RGB PNG.
    PruneImage(PruneImageArgs),
    /// Train a tiny dense network and sweep beta.
    DemoNet(DemoNetArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Output format (bounds --sweep defaults to csv, everything else to json).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args)]
pub struct PruneScoresArgs {
    /// Score file: CSV values or a JSON array. `-` reads stdin.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// JSON list of index arrays; each group is pruned on its own.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Second score file; scores become the elementwise min of magnitudes.
    #[arg(long)]
    pub min_with: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub nu: Option<usize>,
    /// Table of every nu in 1..=n.
    #[arg(long)]
    pub sweep: bool,
    /// Measured retained mass to compare against the bounds.
    #[arg(long)]
    pub observed: Option<f64>,
    /// Kept fraction k/n; enables the loss-change bounds.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub trace_h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta_l1: f64,
    #[arg(long)]
    pub delta_sq: Option<f64>,
    /// SVG plot of the sweep.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: usize,
    /// Comma-separated nu values (default 2..n-1).
    #[arg(long, value_delimiter = ',')]
    pub nu: Vec<usize>,
    #[arg(long, default_value_t = emp_core::simplex::ORACLE_MIN_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also certify the bound on this many sampled score vectors per nu.
    #[arg(long, default_value_t = 0)]
    pub certify: usize,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ImageMode {
    Global,
    Patch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CenteringArg {
    Tile,
    Channel,
}

#[derive(Args)]
pub struct PruneImageArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Pruned PNG.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ImageMode::Global)]
    pub mode: ImageMode,
    #[arg(long, default_value_t = 4)]
    pub patch: usize,
    #[arg(long, value_enum, default_value_t = CenteringArg::Tile)]
    pub centering: CenteringArg,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Blobs,
    Moons,
    Digits,
    Idx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NetMode {
    Global,
    Block,
    Both,
}

#[derive(Args)]
pub struct DemoNetArgs {
    #[arg(long, value_enum, default_value_t = DatasetArg::Blobs)]
    pub dataset: DatasetArg,
    #[arg(long, requires = "idx_labels")]
    pub idx_images: Option<PathBuf>,
    #[arg(long, requires = "idx_images")]
    pub idx_labels: Option<PathBuf>,
    /// Samples per class for the synthetic sets.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Noise level for the synthetic sets.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Layer widths, e.g. 2,16,2 (default depends on the dataset).
    #[arg(long, value_delimiter = ',')]
    pub arch: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0])]
    pub betas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = NetMode::Both)]
    pub mode: NetMode,
    /// Hutchinson probes for Tr(H); 0 skips the loss bounds.
    #[arg(long, default_value_t = 0)]
    pub trace_probes: usize,
    /// Save the trained network as <stem>.json + <stem>.bin.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

fn configure_threads() {
    if let Some(n) = std::env::var("EMP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::PruneScores(a) => commands::prune_scores(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::VerifyGeometry(a) => commands::verify_geometry(a),
        Command::PruneImage(a) => commands::prune_image(a),
        Command::DemoNet(a) => commands::demo_net(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
