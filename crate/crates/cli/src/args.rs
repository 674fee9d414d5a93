use std::path::PathBuf;

use areawatch::evaluation::PositiveClass;
use areawatch::ocsvm::Gamma;
use areawatch::placement::DEFAULT_COMBINATION_LIMIT;
use areawatch::propagation::{DEFAULT_EPSILON, DEFAULT_LAMBDA_FADE};
use areawatch::simharness::{ClassifierMode, DEFAULT_ETA, DEFAULT_SIGMA, DEFAULT_TRANSMIT_POWER};
use areawatch::Point;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Detect objects leaving their target area from RSSI measurements.
#[derive(Debug, Parser)]
#[command(name = "areawatch", version)]
pub struct Cli {
    /// Re-parse every CSV output against its schema before writing it.
    #[arg(long, global = true)]
    pub self_check: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate RSSI data for positions taken from a layout file.
    Simulate(SimulateArgs),
    /// Train a one-class SVM detector on target-area RSSI data.
    Train(TrainArgs),
    /// Classify averaged RSSI windows with a trained detector.
    Detect(DetectArgs),
    /// Closed-form detection rate at probe points or over an annulus.
    Rate(RateArgs),
    /// Rank AP / target-area placements for a layout.
    Optimize(OptimizeArgs),
    /// Leave-one-out evaluation over labelled data sets.
    Eval(EvalArgs),
    /// Scripted simulation experiments.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Fading spread before and after averaging.
    Fig2(Fig2Args),
    /// Detection rate along a ray: analytic versus simulated.
    Fig3(Fig3Args),
}

pub fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y but got {s:?}"))?;
    let x: f64 = x.trim().parse().map_err(|_| format!("bad x coordinate in {s:?}"))?;
    let y: f64 = y.trim().parse().map_err(|_| format!("bad y coordinate in {s:?}"))?;
    Ok(Point::new(x, y))
}

fn parse_gamma(s: &str) -> Result<Gamma, String> {
    s.parse::<Gamma>().map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<ClassifierMode, String> {
    s.parse::<ClassifierMode>().map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    parse_point(s).map(|p| (p.x, p.y))
}

fn parse_zone(s: &str) -> Result<(String, PathBuf), String> {
    let (zone, path) = s.split_once('=').ok_or_else(|| format!("expected ZONE=PATH but got {s:?}"))?;
    if zone.is_empty() {
        return Err("zone name must not be empty".into());
    }
    Ok((zone.to_string(), PathBuf::from(path)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Friis,
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PositiveArg {
    NonTarget,
    Target,
}

impl From<PositiveArg> for PositiveClass {
    fn from(p: PositiveArg) -> Self {
        match p {
            PositiveArg::NonTarget => PositiveClass::NonTarget,
            PositiveArg::Target => PositiveClass::Target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValidateArg {
    Analytic,
    Mc,
}

#[derive(Debug, Args)]
pub struct ChannelOpts {
    #[arg(long, value_enum, default_value = "friis")]
    pub channel: ChannelArg,
    /// Gaussian noise standard deviation in dB (friis channel).
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Transmit power in dBm.
    #[arg(long, default_value_t = DEFAULT_TRANSMIT_POWER, allow_hyphen_values = true)]
    pub tx_power: f64,
    /// Regularizer of the non-singular path loss (rayleigh channel).
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Rate of the exponential fading power (rayleigh channel).
    #[arg(long, default_value_t = DEFAULT_LAMBDA_FADE)]
    pub lambda_fade: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Layout JSON file.
    #[arg(long)]
    pub layout: PathBuf,
    /// Where to simulate: `areas`, `gate`, `outside` or `area:I` (1-based).
    #[arg(long, default_value = "areas")]
    pub at: String,
    /// Random positions to draw for `outside` and `area:I`.
    #[arg(long)]
    pub points: Option<usize>,
    /// Radius in metres of the disc sampled around an area centroid.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Comma-separated 1-based AP candidates to use (default: all).
    #[arg(long, value_delimiter = ',')]
    pub aps: Vec<usize>,
    /// RSSI rows per position.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Path-loss exponent (default: the layout's).
    #[arg(long)]
    pub eta: Option<f64>,
    #[command(flatten)]
    pub channel: ChannelOpts,
    #[arg(long)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training RSSI CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    /// Kernel width or `auto` (1 / number of APs).
    #[arg(long, default_value = "auto", value_parser = parse_gamma)]
    pub gamma: Gamma,
    /// RSSIs averaged per window.
    #[arg(long, default_value_t = 1)]
    pub n_avg: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long)]
    pub max_iterations: Option<u64>,
    /// Output model JSON path.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// RSSI CSV to classify.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub n_avg: usize,
    /// Output CSV path (default: stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// AP position X,Y; repeat per AP.
    #[arg(long = "ap", value_parser = parse_point, required = true, allow_hyphen_values = true)]
    pub aps: Vec<Point>,
    /// Target-area centroid X,Y.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub t_in: Point,
    /// Probe position X,Y; repeatable.
    #[arg(long = "at", value_parser = parse_point, allow_hyphen_values = true)]
    pub probes: Vec<Point>,
    /// Average over the annulus INNER,OUTER (metres) around t_in instead.
    #[arg(long, value_parser = parse_pair)]
    pub annulus: Option<(f64, f64)>,
    /// Monte-Carlo samples for --annulus.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Window size; the noise shrinks to sigma / sqrt(N).
    #[arg(long, default_value_t = 1)]
    pub n_avg: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub layout: PathBuf,
    /// Refuse to enumerate more combinations than this.
    #[arg(long, default_value_t = DEFAULT_COMBINATION_LIMIT)]
    pub max_combinations: u128,
    /// Also compute detection rates at the gate and their rank correlation.
    #[arg(long, value_enum)]
    pub validate: Option<ValidateArg>,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    /// Windows per training and test set (mc validation).
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub n_avg: usize,
    #[arg(long, default_value_t = DEFAULT_TRANSMIT_POWER, allow_hyphen_values = true)]
    pub tx_power: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Target-area CSV; every position block is one data set.
    #[arg(long)]
    pub target: PathBuf,
    /// Non-target zone data as ZONE=CSV; repeatable.
    #[arg(long = "negative", value_parser = parse_zone)]
    pub negatives: Vec<(String, PathBuf)>,
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    #[arg(long, default_value = "auto", value_parser = parse_gamma)]
    pub gamma: Gamma,
    #[arg(long, default_value_t = 1)]
    pub n_avg: usize,
    /// Class counted as positive for precision and recall.
    #[arg(long, value_enum, default_value = "non-target")]
    pub positive: PositiveArg,
    /// Zone reported as the detection rate (default: all negatives pooled).
    #[arg(long)]
    pub outside: Option<String>,
    /// Write the full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write per-fold results as CSV.
    #[arg(long)]
    pub folds_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Fig2Args {
    #[arg(long, default_value_t = DEFAULT_LAMBDA_FADE)]
    pub lambda_fade: f64,
    #[arg(long, default_value_t = 5)]
    pub n_avg: usize,
    /// Number of windows drawn.
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Fig3Args {
    /// Gaussian channel noise in dB.
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    /// Test windows per probe.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Training windows at t_in.
    #[arg(long, default_value_t = 10_000)]
    pub train_trials: usize,
    #[arg(long, default_value_t = 1)]
    pub n_avg: usize,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// `surrogate` or `ocsvm`.
    #[arg(long, default_value = "surrogate", value_parser = parse_mode)]
    pub mode: ClassifierMode,
    /// Nearest and farthest probe distance from t_in in metres.
    #[arg(long, value_parser = parse_pair, default_value = "3,30")]
    pub range: (f64, f64),
    #[arg(long, default_value_t = 20)]
    pub probes: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write whitespace-separated plot data here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}
