//! Command-line option definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ropescale::Extent;

#[derive(Debug, Parser)]
#[command(
    name = "ropescale",
    version,
    about = "Rotary-frequency rescaling for resolution promotion, with spectral analysis tooling",
    propagate_version = true
)]
pub struct Cli {
    /// key=value config file; explicit flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for all randomized work; identical seeds reproduce outputs
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,

    /// Worker threads for corpus and multi-seed workloads (0 = automatic)
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

/// Method and schedule flags shared by most subcommands. Unset values fall
/// back to the config file, then to the defaults (sharp, rational,
/// alpha_s = 3, bounds (1, 32)).
#[derive(Debug, Clone, Args)]
pub struct MethodOpts {
    /// Rescaling method: direct | pi | ntk | yarn | sharp
    #[arg(long)]
    pub method: Option<String>,

    /// Schedule family for sharp: static | linear | cosine | rational
    #[arg(long)]
    pub family: Option<String>,

    /// Rational scheduler coefficient, >= 1
    #[arg(long, value_name = "A")]
    pub alpha_s: Option<f64>,

    /// Ramp lower bound, >= 0
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Ramp upper bound, > alpha
    #[arg(long)]
    pub beta: Option<f64>,
}

/// Frequency-table and promotion flags. Defaults: axis dims 32,32, base
/// 10000, training 64x64, target 128x128.
#[derive(Debug, Clone, Args)]
pub struct TableOpts {
    /// Embedding dims per spatial axis, e.g. 32,32
    #[arg(long, value_name = "D,..", value_delimiter = ',')]
    pub axis_dims: Option<Vec<usize>>,

    /// RoPE base frequency, > 1
    #[arg(long)]
    pub base: Option<f64>,

    /// Training extent in tokens, HxW
    #[arg(long, value_name = "HxW")]
    pub train_extent: Option<Extent>,

    /// Target extent in tokens, HxW
    #[arg(long, value_name = "HxW")]
    pub target_extent: Option<Extent>,
}

/// Spectrum-model flags. Defaults: powerlaw:0.01:2 over unit noise.
#[derive(Debug, Clone, Args)]
pub struct ModelOpts {
    /// Clean-data spectrum: flat:L | powerlaw:A:E | bands:L1,L2,..
    #[arg(long, value_name = "SPEC")]
    pub spectrum: Option<String>,

    /// White noise floor, > 0
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the decay schedule over a uniform timestep grid
    Schedule {
        #[command(flatten)]
        method: MethodOpts,
        /// Number of sampler steps
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },

    /// Per-dimension frequency table for a method at a timestep
    Freqs {
        #[command(flatten)]
        method: MethodOpts,
        #[command(flatten)]
        table: TableOpts,
        /// Timestep for the dynamic method (static methods ignore it)
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },

    /// Radial power spectra of one or two image corpora
    Psd {
        /// Directory of PNG/PGM/RAWF images
        #[arg(long, value_name = "DIR")]
        corpus_a: PathBuf,
        /// Optional second corpus to compare against
        #[arg(long, value_name = "DIR")]
        corpus_b: Option<PathBuf>,
        /// Square analysis size
        #[arg(long, default_value_t = 512)]
        resize: usize,
        /// Inclusive baseline bin range LO:HI for normalization
        #[arg(long, default_value = "2:10", value_name = "LO:HI")]
        baseline: String,
        /// Low/mid/high summary bands as LO:HI,LO:HI,LO:HI cycles/image
        #[arg(long, default_value = "2:16,16:96,96:240", value_name = "BANDS")]
        bands: String,
    },

    /// Recovery-score grid over frequency and time
    Heatmap {
        #[command(flatten)]
        model: ModelOpts,
        /// Frequency samples over (0, 0.5]
        #[arg(long, default_value_t = 64)]
        f_bins: usize,
        /// Time samples over [0, 1]
        #[arg(long, default_value_t = 64)]
        t_bins: usize,
    },

    /// Run the denoising loop with the spectral-oracle denoiser
    Simulate {
        #[command(flatten)]
        method: MethodOpts,
        #[command(flatten)]
        table: TableOpts,
        #[command(flatten)]
        model: ModelOpts,
        /// Number of sampler steps
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },

    /// Positional out-of-distribution drift report
    Probe {
        #[command(flatten)]
        method: MethodOpts,
        #[command(flatten)]
        table: TableOpts,
        /// Random unit query/key pairs
        #[arg(long, default_value_t = 16)]
        probes: usize,
        /// Timesteps probed by the dynamic method, descending
        #[arg(long, default_value = "1.0,0.5,0.1", value_name = "T,..")]
        timesteps: String,
    },

    /// Rescaling-vs-attention overhead microbenchmark
    Bench {
        #[command(flatten)]
        method: MethodOpts,
        #[command(flatten)]
        table: TableOpts,
        /// Timed repetitions (>= 10)
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// Sampler steps swept per rescale repetition
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Schedule { .. } => "schedule",
            Command::Freqs { .. } => "freqs",
            Command::Psd { .. } => "psd",
            Command::Heatmap { .. } => "heatmap",
            Command::Simulate { .. } => "simulate",
            Command::Probe { .. } => "probe",
            Command::Bench { .. } => "bench",
        }
    }
}
