use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "ssense",
    version,
    about = "Sparse sensor placement, reconstruction and benchmarking",
    args_override_self = true
)]
pub struct Cli {
    /// Omit wall-clock timestamps from every output so reruns are byte-identical.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// JSON file of flag defaults; flags on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a POD basis to a snapshot matrix.
    Train(TrainArgs),
    /// Choose sensor locations for a basis.
    Place(PlaceArgs),
    /// Reconstruct full states from point measurements.
    Reconstruct(ReconstructArgs),
    /// Reconstruction error against basis rank.
    SweepRank(SweepRankArgs),
    /// Reconstruction error against sensor noise.
    SweepNoise(SweepNoiseArgs),
    /// Three-tone compressed-sensing demo.
    CsDemo(CsDemoArgs),
    /// Polynomial interpolation at QR-pivot points versus equispaced points.
    Fekete(FeketeArgs),
    /// Score a sensor set against a basis.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct MeanFlags {
    /// Subtract the snapshot mean before the SVD (default).
    #[arg(long, overrides_with = "no_mean_subtract")]
    pub mean_subtract: bool,
    #[arg(long, overrides_with = "mean_subtract")]
    pub no_mean_subtract: bool,
}

impl MeanFlags {
    pub fn enabled(&self) -> bool {
        !self.no_mean_subtract
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Snapshot matrix (.ssp binary or .csv).
    #[arg(long)]
    pub input: PathBuf,
    /// fixed:N, energy:F or auto.
    #[arg(long, default_value = "auto")]
    pub rank: String,
    #[command(flatten)]
    pub mean: MeanFlags,
    /// Output directory for the basis.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct PlaceArgs {
    /// Basis directory written by `train`.
    #[arg(long)]
    pub basis: PathBuf,
    /// Number of sensors; defaults to the basis rank.
    #[arg(long)]
    pub p: Option<usize>,
    /// qr, deim, random or brute.
    #[arg(long, default_value = "qr")]
    pub method: String,
    /// Objective for brute-force search: d, a, e or cond.
    #[arg(long, default_value = "d")]
    pub criterion: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sensor JSON file; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub basis: PathBuf,
    #[arg(long)]
    pub sensors: PathBuf,
    /// p×k matrix, one measurement vector per column. Sampled from --truth when omitted.
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    /// n×k matrix of true states for error reporting.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Standard deviation of Gaussian noise added to the measurements.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reconstructed n×k states; a JSON report is written alongside.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DataArgs {
    /// Snapshot matrix to split into training and test sets.
    #[arg(long, conflicts_with_all = ["train", "test"])]
    pub input: Option<PathBuf>,
    /// chrono, interleave:K or random:SEED.
    #[arg(long, default_value = "interleave:5")]
    pub split: String,
    /// Test share for the chrono and random splits.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SweepRankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma list and/or inclusive ranges, e.g. `1,2,5:8`.
    #[arg(long)]
    pub ranks: String,
    /// Comma list of qr, deim, random. POD projection is always added.
    #[arg(long)]
    pub methods: Option<String>,
    /// r or 2r.
    #[arg(long, default_value = "r")]
    pub p_rule: String,
    #[command(flatten)]
    pub mean: MeanFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV table; the JSON report goes next to it with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SweepNoiseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub rank: usize,
    /// Comma list of noise levels.
    #[arg(long)]
    pub etas: String,
    /// Comma list of qr, qr2r, deim. POD projection is always added.
    #[arg(long, default_value = "qr,qr2r,deim")]
    pub methods: String,
    #[command(flatten)]
    pub mean: MeanFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CsDemoArgs {
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value_t = 256)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// random or equispaced.
    #[arg(long, default_value = "random")]
    pub sampling: String,
    #[arg(long, default_value_t = 6)]
    pub k_max: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FeketeArgs {
    #[arg(long, default_value_t = 30)]
    pub degree: usize,
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[arg(long)]
    pub basis: PathBuf,
    #[arg(long)]
    pub sensors: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
