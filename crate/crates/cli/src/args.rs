//! Command-line flags. Every flag is optional so that a `--config` JSON file
//! can supply it instead; flags given on the command line win.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dnstat::config::{ModelSpec, ScheduleSpec, SeqSpec, WeightSpec};
use dnstat::korovkin::{Mode, Perturbation};
use dnstat::{NormalizerMode, Weighting};
use serde::{Deserialize, Serialize};

const AFTER_HELP: &str = "\
Output formats:
  json   one object with keys \"dnstat\" (version), \"config\" (the resolved
         configuration) and \"result\".
  table  two '#' header lines (version, resolved config as JSON), then a
         human-readable table.
  csv    the same two '#' header lines, then CSV:
           mean      m,R_m,t_m
           detect    detector,t,m,R_m,count,d_m   (t is empty except for dndc)
           korovkin  n,<one column per function>  (sup-norm distances s_n)
           repro     example,quantity,observed,stated

Config files (--config path) hold a JSON object with a \"command\" key, an
optional \"format\" key, and any of the subcommand's flags by their long
names with '-' replaced by '_'. Unknown keys are rejected.

Exit status: 0 on success (whatever the verdicts), 1 if a computation
fails, 2 if the configuration is invalid.";

#[derive(Debug, Parser)]
#[command(name = "dnstat", version, about = "Deferred Nörlund statistical convergence toolkit", after_help = AFTER_HELP)]
pub struct Cli {
    /// Output format [default: table]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// JSON file with the run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deferred Nörlund means t_m of a real sequence
    Mean(MeanArgs),
    /// Run the convergence detectors on a random-variable model
    Detect(DetectArgs),
    /// Korovkin conditions for (perturbed) Meyer-König–Zeller operators
    Korovkin(KorovkinArgs),
    /// Reproduce the worked examples and optionally compare with a saved run
    Repro(ReproArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mean(_) => "mean",
            Command::Detect(_) => "detect",
            Command::Korovkin(_) => "korovkin",
            Command::Repro(_) => "repro",
        }
    }
}

fn parse_schedule(s: &str) -> Result<ScheduleSpec, String> {
    Ok(ScheduleSpec::Named(s.to_string()))
}

fn parse_weights(s: &str) -> Result<WeightSpec, String> {
    Ok(WeightSpec::Named(s.to_string()))
}

fn parse_seq(s: &str) -> Result<SeqSpec, String> {
    Ok(SeqSpec::Named(s.to_string()))
}

fn parse_model(s: &str) -> Result<ModelSpec, String> {
    Ok(ModelSpec::Named(s.to_string()))
}

fn parse_normalizer(s: &str) -> Result<NormalizerMode, String> {
    match s {
        "regular" => Ok(NormalizerMode::Regular),
        "paper-literal" | "literal" => Ok(NormalizerMode::PaperLiteral),
        other => Err(format!("expected regular or paper-literal, got {other:?}")),
    }
}

fn parse_weighting(s: &str) -> Result<Weighting, String> {
    match s {
        "window-relative" => Ok(Weighting::WindowRelative),
        "literal" => Ok(Weighting::Literal),
        other => Err(format!("expected window-relative or literal, got {other:?}")),
    }
}

fn parse_perturbation(s: &str) -> Result<Perturbation, String> {
    Perturbation::parse(s).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).map_err(|e| e.to_string())
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Self { $($f: $a.$f.or($b.$f)),* }
    };
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct MeanArgs {
    /// identity, const:c, squares, alternating [default: identity]
    #[arg(long, value_parser = parse_seq)]
    pub seq: Option<SeqSpec>,
    /// plain, example1, "xa,ya" (x=xa*m, y=ya*m) or "xa,xb,ya,yb" [default: plain]
    #[arg(long, allow_hyphen_values = true, value_parser = parse_schedule)]
    pub schedule: Option<ScheduleSpec>,
    /// ones, identity, example1 [default: ones]
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<WeightSpec>,
    /// Largest m [default: 10]
    #[arg(long)]
    pub horizon: Option<u64>,
    /// regular or paper-literal [default: regular]
    #[arg(long, value_parser = parse_normalizer)]
    pub mode: Option<NormalizerMode>,
}

impl MeanArgs {
    pub fn merge(self, file: Self) -> Self {
        merge_fields!(self, file; seq, schedule, weights, horizon, mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Dnp,
    Dnm,
    Dndc,
    All,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct DetectArgs {
    /// example1, example2, degenerate:c, deterministic:a,b,p, spike:h,p, shrinking:s,r [default: example1]
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelSpec>,
    /// Detector to run [default: dnp]
    #[arg(long, value_enum)]
    pub mode: Option<Detector>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Moment order for dnm [default: 1]
    #[arg(long)]
    pub r: Option<f64>,
    /// Comma-separated evaluation points for dndc [default: midpoints of the limit atoms]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    /// [default: example1]
    #[arg(long, allow_hyphen_values = true, value_parser = parse_schedule)]
    pub schedule: Option<ScheduleSpec>,
    /// [default: example1]
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<WeightSpec>,
    /// [default: 10000]
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Verdict tolerance on tail densities [default: 0.02]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Fraction of the horizon forming the tail [default: 0.2]
    #[arg(long)]
    pub tail_fraction: Option<f64>,
    /// regular or paper-literal [default: regular]
    #[arg(long, value_parser = parse_normalizer)]
    pub normalizer: Option<NormalizerMode>,
    /// window-relative or literal [default: window-relative]
    #[arg(long, value_parser = parse_weighting)]
    pub weighting: Option<Weighting>,
    /// Also write the density traces as CSV to this path
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl DetectArgs {
    pub fn merge(self, file: Self) -> Self {
        merge_fields!(self, file; model, mode, eps, delta, r, grid, schedule, weights, horizon,
            tolerance, tail_fraction, normalizer, weighting, trace)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct KorovkinArgs {
    /// Base operator; only mkz is available [default: mkz]
    #[arg(long)]
    pub op: Option<String>,
    /// none, papercdf or nullset [default: none]
    #[arg(long, value_parser = parse_perturbation)]
    pub perturb: Option<Perturbation>,
    /// Mode tag dnp, dnm or dndc [default: dnp]
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Conclusion function (repeatable): 1, y, y^2, y^3, e^y, |y-1/2| [default: y^3]
    #[arg(long = "f")]
    pub f: Option<Vec<String>>,
    /// [default: 200]
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Number of equispaced points in [0, 1] [default: 257]
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Series truncation tolerance [default: 1e-10]
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Threshold on weighted sup-norm distances [default: 0.1]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Verdict tolerance on tail densities [default: 0.05]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// [default: "0,5" i.e. windows 1..=5m]
    #[arg(long, allow_hyphen_values = true, value_parser = parse_schedule)]
    pub schedule: Option<ScheduleSpec>,
    /// [default: ones]
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<WeightSpec>,
    /// regular or paper-literal [default: regular]
    #[arg(long, value_parser = parse_normalizer)]
    pub normalizer: Option<NormalizerMode>,
}

impl KorovkinArgs {
    pub fn merge(self, file: Self) -> Self {
        merge_fields!(self, file; op, perturb, mode, f, horizon, grid_size, tail_tol, eps,
            tolerance, schedule, weights, normalizer)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct ReproArgs {
    /// Seed for the Monte Carlo cross-checks [default: 20240601]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Draws per Monte Carlo cross-check [default: 100000]
    #[arg(long)]
    pub samples: Option<u64>,
    /// Horizon for the detector examples [default: 10000]
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Compare the output with this file (ignoring the version line); exit 1 on mismatch
    #[arg(long)]
    pub check: Option<PathBuf>,
}

impl ReproArgs {
    pub fn merge(self, file: Self) -> Self {
        merge_fields!(self, file; seed, samples, horizon, check)
    }
}
