//! molfield: sample molecular fields onto grids, fit modulated sine
//! networks to them, and evaluate/export the results.

mod commands;
mod manifest;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "molfield", version, about = "Molecular neural fields toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F64,
    F32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    AutoDecoder,
    AutoEncoder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Cube,
    Latents,
}

#[derive(Subcommand)]
pub enum Command {
    /// Sample a molecule's field onto a grid and write an MVF1 volume.
    /// With a directory input, samples every structure file onto a shared
    /// cubic world extent.
    Sample(SampleArgs),
    /// Fit a network to one or more volumes (auto-decoder or auto-encoder).
    Train(TrainArgs),
    /// Evaluate a trained network on a grid, optionally against a reference.
    Reconstruct(ReconstructArgs),
    /// Decode a linear path between two latents into a volume sequence.
    Interpolate(InterpolateArgs),
    /// Convert artifacts to external formats (Gaussian cube, latent CSV).
    Export(ExportArgs),
    /// PSNR between two volumes.
    Psnr(PsnrArgs),
}

#[derive(Args)]
pub struct SampleArgs {
    /// Structure file (xyz/pdb/sdf) or a directory of them
    #[arg(long)]
    pub input: PathBuf,
    /// Force an input format instead of sniffing the extension
    #[arg(long)]
    pub format: Option<String>,
    /// Channel config file; default is one wildcard vdW channel
    #[arg(long)]
    pub channels: Option<PathBuf>,
    /// Element property override table
    #[arg(long)]
    pub element_overrides: Option<PathBuf>,
    /// Grid dims: one value for a cube or three comma-separated
    #[arg(long, default_value = "32")]
    pub dims: String,
    /// Bounding-box padding in Angstrom
    #[arg(long, default_value_t = 2.0)]
    pub padding: f64,
    /// Field scaling factor; overrides the channel config
    #[arg(long)]
    pub beta: Option<f64>,
    /// Drop per-atom contributions below this value (default exact)
    #[arg(long)]
    pub cull_epsilon: Option<f64>,
    /// Keep PDB water residues
    #[arg(long)]
    pub include_waters: bool,
    /// Reject unknown element symbols instead of carrying them
    #[arg(long)]
    pub strict_elements: bool,
    /// 1-based record index for multi-record SDF files
    #[arg(long, default_value_t = 1)]
    pub sdf_record: usize,
    /// Output .mvf file, or a directory when the input is a directory
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Volume files, or a single directory of .mvf files
    #[arg(long, num_args = 1.., required = true)]
    pub volumes: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "auto-decoder")]
    pub mode: ModeArg,
    /// TOML file with hyperparameters; explicit flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Network learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// Latent learning rate (auto-decoder)
    #[arg(long)]
    pub latent_lr: Option<f64>,
    #[arg(long)]
    pub batch_voxels: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub latent_init_scale: Option<f64>,
    #[arg(long)]
    pub adam_beta1: Option<f64>,
    #[arg(long)]
    pub adam_beta2: Option<f64>,
    #[arg(long)]
    pub adam_epsilon: Option<f64>,
    /// Hidden width of the synthesis network
    #[arg(long)]
    pub width: Option<usize>,
    /// Number of hidden (sine) layers
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Encoder conv widths, comma-separated (auto-encoder)
    #[arg(long)]
    pub encoder_widths: Option<String>,
    /// Stop once mean reconstruction PSNR reaches this many dB
    #[arg(long)]
    pub psnr_target: Option<f64>,
    /// How often (steps) to evaluate the stop rule
    #[arg(long)]
    pub psnr_check_every: Option<u64>,
    /// Continue training from an existing checkpoint
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
    /// Output checkpoint path
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Loss log CSV (default: alongside the checkpoint)
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Index into the checkpoint latent table (or into --latent-file)
    #[arg(long)]
    pub latent_index: Option<usize>,
    /// CSV latent table to read the latent from
    #[arg(long)]
    pub latent_file: Option<PathBuf>,
    /// Volume to encode into a latent (auto-encoder checkpoints)
    #[arg(long)]
    pub encode_volume: Option<PathBuf>,
    /// Output grid dims; default: the training grid
    #[arg(long)]
    pub dims: Option<String>,
    /// Upscale factor relative to the training grid
    #[arg(long)]
    pub factor: Option<usize>,
    /// Reference volume; triggers a PSNR report
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct InterpolateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub index_a: usize,
    #[arg(long)]
    pub index_b: usize,
    /// Number of interpolation steps including both endpoints
    #[arg(long, default_value_t = 8)]
    pub steps: usize,
    /// CSV latent table to index instead of the checkpoint table
    #[arg(long)]
    pub latent_file: Option<PathBuf>,
    /// Output grid dims; default: the training grid
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Args)]
pub struct ExportArgs {
    /// MVF1 volume (cube) or checkpoint (latents)
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    /// Channel index for cube export
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    /// Structure file to embed in the cube atom block
    #[arg(long)]
    pub molecule: Option<PathBuf>,
    #[arg(long)]
    pub molecule_format: Option<String>,
    /// Volumes to encode for latent export from auto-encoder checkpoints
    #[arg(long, num_args = 0..)]
    pub volumes: Vec<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct PsnrArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Also write the report as JSON
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(args) => commands::sample::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Reconstruct(args) => commands::reconstruct::run(args),
        Command::Interpolate(args) => commands::interpolate::run(args),
        Command::Export(args) => commands::export::run(args),
        Command::Psnr(args) => commands::psnr::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
