//! `scaffold`: command-line driver for the scaffold pre-processing pipeline.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use scaffold_core::coverage::CoverageForm;
use scaffold_core::placement::Optimizer;
use scaffold_core::synth::SceneKind;
use scaffold_core::ErrorKind;

use config::{BaselineKind, Config, DepthFormat, Visibility};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] scaffold_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Input => 3,
                ErrorKind::Numerical => 4,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "scaffold", version, about = "Coverage, basis placement and view planning on mesh scaffolds")]
struct Cli {
    /// TOML or JSON config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scene: mesh.ply, trajectory.json, features.json.
    Synth(SynthArgs),
    /// Accumulate per-sample coverage weights.
    Coverage(CoverageArgs),
    /// Optimize basis positions and write baseline placements.
    Place(PlaceArgs),
    /// Select virtual viewpoints and export their scaffold depth.
    PlanViews(PlanViewsArgs),
    /// Render scaffold depth for every camera in a trajectory or plan.
    RenderDepth(RenderDepthArgs),
    /// Compare placement strategies and score depth agreement.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_enum::<SceneKind>)]
    scene: Option<SceneKind>,
    #[arg(long)]
    subdivisions: Option<u32>,
    #[arg(long)]
    cameras: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CoverageFlags {
    /// Surface samples drawn from the mesh.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_parser = parse_enum::<CoverageForm>)]
    form: Option<CoverageForm>,
    #[arg(long, value_enum)]
    visibility: Option<Visibility>,
    #[arg(long)]
    eps_occ_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: CoverageFlags,
}

#[derive(Debug, Args)]
pub struct PlacementFlags {
    #[arg(long)]
    basis_count: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long, value_parser = parse_enum::<Optimizer>)]
    optimizer: Option<Optimizer>,
    /// Assign every sample to its nearest basis, ignoring which side of the
    /// surface the basis is on.
    #[arg(long)]
    unconstrained_assign: bool,
}

#[derive(Debug, Args)]
pub struct PlaceArgs {
    /// Coverage JSON from `scaffold coverage`; computed from --mesh when absent.
    #[arg(long)]
    coverage: Option<PathBuf>,
    #[arg(long)]
    trajectory: PathBuf,
    /// Scene mesh; sets the grid-baseline bounds.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    baseline: Option<BaselineKind>,
    /// K-means core clusters over the optimized bases (0 disables).
    #[arg(long)]
    cores: Option<usize>,
    #[command(flatten)]
    placement: PlacementFlags,
    #[command(flatten)]
    coverage_flags: CoverageFlags,
}

#[derive(Debug, Args)]
pub struct PlanViewsArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Candidates must also see a training camera center.
    #[arg(long)]
    line_of_sight: bool,
}

#[derive(Debug, Args)]
pub struct RenderDepthArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Trajectory or view-plan JSON.
    #[arg(long)]
    cameras: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<DepthFormat>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    coverage: Option<PathBuf>,
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated basis counts.
    #[arg(long, value_delimiter = ',')]
    basis_counts: Option<Vec<usize>>,
    /// Directory of reference depth maps (with manifest.json, or matching file names).
    #[arg(long, requires = "predicted")]
    reference: Option<PathBuf>,
    /// Directory of predicted depth maps with the same file names.
    #[arg(long, requires = "reference")]
    predicted: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Fit a per-map scale and shift of the predictions first.
    #[arg(long)]
    align: bool,
    #[command(flatten)]
    placement: PlacementFlags,
    #[command(flatten)]
    coverage_flags: CoverageFlags,
}

/// Parses a value with the same spelling its config-file form uses.
fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match cli.command {
        Command::Synth(a) => commands::synth(cfg, a),
        Command::Coverage(a) => commands::coverage(cfg, a),
        Command::Place(a) => commands::place(cfg, a),
        Command::PlanViews(a) => commands::plan_views(cfg, a),
        Command::RenderDepth(a) => commands::render_depth(cfg, a),
        Command::Eval(a) => commands::eval(cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
