//! `lightsense` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lightsense::{IngestError, Membership, ParseError};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "lightsense",
    version,
    about = "Light sensor placement and light-state disaggregation"
)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the scene and write contributions.csv.
    Simulate(SceneArgs),
    /// Write per-door-state and aggregate distinctness heatmaps.
    Heatmap(SceneArgs),
    /// Choose sensor positions covering every application state.
    SolveCover(CoverArgs),
    /// Disaggregate readings at sensor positions.
    Infer(InferArgs),
    /// Score logged sample/command streams per location.
    Ingest(IngestArgs),
    /// Write synthetic samples.csv/commands.csv for chosen positions.
    SynthLog(SynthArgs),
}

#[derive(Args, Debug, Clone)]
struct SceneArgs {
    /// Scene description file.
    #[arg(long)]
    scene: PathBuf,
    /// Distinctness threshold in lux.
    #[arg(long, default_value_t = 0.01, value_parser = non_negative)]
    tau: f64,
    /// Override every grid's spacing, in metres.
    #[arg(long, value_parser = positive)]
    grid_spacing: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Universe {
    /// Only the state with every door fully open.
    OpenDoor,
    /// All door states.
    Full,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MembershipArg {
    Luminaire,
    State,
}

impl From<MembershipArg> for Membership {
    fn from(m: MembershipArg) -> Self {
        match m {
            MembershipArg::Luminaire => Membership::Luminaire,
            MembershipArg::State => Membership::State,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct CoverArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, value_enum, default_value_t = Universe::Full)]
    universe: Universe,
    /// What a position is credited with covering.
    #[arg(long, value_enum, default_value_t = MembershipArg::Luminaire)]
    membership: MembershipArg,
    /// Also solve exactly (small universes only).
    #[arg(long)]
    exact: bool,
    /// Largest universe the exact solver accepts.
    #[arg(long, default_value_t = lightsense::planning::DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
}

#[derive(Args, Debug, Clone)]
struct NoiseArgs {
    /// Gaussian reading noise, lux.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct InferArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Matching tolerance in lux.
    #[arg(long, default_value_t = 0.01, value_parser = non_negative)]
    epsilon: f64,
    /// CSV `reading,point_index,door_state,lux[,config_p]`. Without it,
    /// every configuration is simulated at every sensor position.
    #[arg(long)]
    readings: Option<PathBuf>,
    /// Sensor positions (candidate indices) for simulated readings; by
    /// default the greedy full-universe cover.
    #[arg(long, value_delimiter = ',')]
    points: Vec<usize>,
    /// Report the nearest sums when nothing matches within epsilon.
    #[arg(long)]
    nearest: bool,
}

#[derive(Args, Debug, Clone)]
struct IngestArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    commands: PathBuf,
    /// Number of luminaires addressed by the command bitmasks.
    #[arg(long)]
    luminaires: usize,
    #[arg(long, default_value_t = 0.01, value_parser = non_negative)]
    epsilon: f64,
    /// Seconds discarded after each command.
    #[arg(long, default_value_t = lightsense::ingest::DEFAULT_SETTLE, value_parser = non_negative)]
    settle: f64,
    /// Seconds averaged after settling.
    #[arg(long, default_value_t = lightsense::ingest::DEFAULT_WINDOW, value_parser = positive)]
    window: f64,
    /// Fit contributions by least squares over all baselines.
    #[arg(long)]
    least_squares: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SynthArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Candidate indices to log, one location each.
    #[arg(long, value_delimiter = ',', required = true)]
    points: Vec<usize>,
    /// Door state index held during the run; defaults to all doors open.
    #[arg(long)]
    door_state: Option<usize>,
    /// Ambient lux added to every sample.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    background: f64,
    /// Seconds each configuration is held.
    #[arg(long, default_value_t = 8.0, value_parser = positive)]
    dwell: f64,
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a finite value >= 0".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a finite value > 0".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// A request that cannot be carried out as asked.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Usage(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(ParseError::Io { .. }) = cause.downcast_ref::<ParseError>() {
            return 2;
        }
        if let Some(IngestError::Io(_)) = cause.downcast_ref::<IngestError>() {
            return 2;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Heatmap(a) => commands::heatmap(&a),
        Command::SolveCover(a) => commands::solve_cover(&a),
        Command::Infer(a) => commands::infer(&a),
        Command::Ingest(a) => commands::ingest(&a),
        Command::SynthLog(a) => commands::synth_log(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
