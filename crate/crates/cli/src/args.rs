use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lis_core::fields::Extent;
use lis_core::gram::GramMode;

#[derive(Debug, Parser)]
#[command(
    name = "lis",
    version,
    about = "Uplink capacity of terminals facing a large intelligent surface"
)]
pub struct Cli {
    /// Flat TOML file with default parameter values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true, env = "LIS_THREADS")]
    pub threads: Option<usize>,
    /// Show capacities in bits instead of nats on the summary line.
    #[arg(long, global = true)]
    pub bits: bool,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare the numerical line correlation with its sinc approximation.
    SincAudit(SincAuditArgs),
    /// Build a Gram matrix and write it in text form.
    Gram(GramArgs),
    /// Closed-form capacities of an equi-spaced line.
    #[command(name = "capacity-1d")]
    Capacity1d(Capacity1dArgs),
    /// Closed-form capacity per m^2 of a plane.
    #[command(name = "capacity-2d")]
    Capacity2d(Capacity2dArgs),
    /// Signal dimensions per unit length or area.
    Dims(DimsArgs),
    /// Monte-Carlo capacity of random deployments.
    Simulate(SimulateArgs),
    /// Run a figure preset.
    Preset(PresetArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct QuadArgs {
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_panel_fraction_of_lambda: Option<f64>,
    #[arg(long)]
    pub line_truncation_tol: Option<f64>,
    #[arg(long)]
    pub max_panels: Option<usize>,
    #[arg(long)]
    pub max_shared_nodes: Option<usize>,
    #[arg(long)]
    pub effective_infinity_factor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SincAuditArgs {
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Largest offset of the grid `[0, dx_max]`.
    #[arg(long)]
    pub dx_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    /// CSV with columns x,y,z,power.
    #[arg(long)]
    pub terminals: Option<PathBuf>,
    /// Instead of a file: this many terminals on an equi-spaced line.
    #[arg(long)]
    pub line_k: Option<usize>,
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub z0: Option<f64>,
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long)]
    pub surface_a: Option<Extent>,
    #[arg(long)]
    pub surface_b: Option<Extent>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mode: Option<GramMode>,
    /// Also report capacities at this noise level.
    #[arg(long)]
    pub n0: Option<f64>,
    #[arg(long)]
    pub rank_threshold: Option<f64>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Args)]
pub struct Capacity1dArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, conflicts_with = "theta")]
    pub delta_x: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub n0: Option<f64>,
    /// Power per meter.
    #[arg(long, conflicts_with = "power")]
    pub pbar: Option<f64>,
    /// Power per terminal.
    #[arg(long)]
    pub power: Option<f64>,
    /// Sweep `theta` log-uniformly over `[theta_min, theta_max]`.
    #[arg(long, requires = "theta_max")]
    pub theta_min: Option<f64>,
    #[arg(long, requires = "theta_min")]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Capacity2dArgs {
    #[arg(long = "lambda", value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub pbar_over_n0: Vec<f64>,
    #[arg(long)]
    pub snr_min: Option<f64>,
    #[arg(long)]
    pub snr_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeometryKind {
    Line,
    Plane,
    Cube,
}

impl std::str::FromStr for GeometryKind {
    type Err = lis_core::Error;
    fn from_str(s: &str) -> lis_core::Result<Self> {
        <GeometryKind as ValueEnum>::from_str(s, true)
            .map_err(|_| lis_core::Error::InvalidInput(format!("unknown geometry '{s}'")))
    }
}

#[derive(Debug, Args)]
pub struct DimsArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub geometry: Option<GeometryKind>,
    /// Line density parameter `lambda / (2 delta_x)`; defaults to 1.
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReceiverArg {
    Optimal,
    Mf,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DeploymentArgs {
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub depth: Option<f64>,
    #[arg(long)]
    pub z0: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<GramMode>,
    #[arg(long)]
    pub rank_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub geometry: Option<GeometryKind>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub surface_a: Option<Extent>,
    #[arg(long)]
    pub surface_b: Option<Extent>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub n0: Option<f64>,
    /// Fixed power per terminal.
    #[arg(long, conflicts_with = "pbar")]
    pub power: Option<f64>,
    /// Fixed power per unit volume.
    #[arg(long)]
    pub pbar: Option<f64>,
    #[arg(long)]
    pub receiver: Option<ReceiverArg>,
    #[command(flatten)]
    pub deployment: DeploymentArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    /// fig4, fig6, fig7, fig8, fig9 or fig11.
    pub name: String,
    /// Override the preset's density list (Monte-Carlo presets).
    #[arg(long, value_delimiter = ',')]
    pub densities: Vec<f64>,
    /// Switch a Monte-Carlo preset to per-volume power `pbar`.
    #[arg(long, conflicts_with = "power")]
    pub pbar: Option<f64>,
    /// Switch a Monte-Carlo preset to per-terminal power.
    #[arg(long)]
    pub power: Option<f64>,
    #[command(flatten)]
    pub deployment: DeploymentArgs,
    #[command(flatten)]
    pub quad: QuadArgs,
}
