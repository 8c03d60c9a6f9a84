use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fermat_core::clustering::Init;
use fermat_core::GraphKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "fermat", version, about = "Fermat distance experiments")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic point cloud.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Compute a sample Fermat distance matrix.
    Fermat(FermatArgs),
    /// Fermat K-medoids over seeds and powers, scored against ground truth.
    Cluster(ClusterArgs),
    /// Closed-form lower bound on the power parameter.
    AlphaBound(AlphaBoundArgs),
    /// Monte-Carlo mean, variance and CV of the normalized distance.
    CvSweep(CvSweepArgs),
    /// Macroscopic distance or cluster feasibility on a density grid.
    Macro(MacroArgs),
    /// Re-run a recorded command and compare its outputs.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GenCommand {
    /// Two annuli plus uniform background noise.
    Clutter {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Four Gaussian blobs rolled into three dimensions.
    SwissRoll {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Uniform sample of the unit cube.
    Cube {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Poisson process on the unit cube.
    Poisson {
        #[arg(long)]
        intensity: f64,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FermatArgs {
    /// Point cloud CSV.
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// `complete` or `knn:K`.
    #[arg(long, default_value = "complete")]
    pub graph: GraphKind,
    /// Intrinsic dimension used by --normalize.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub normalize: bool,
    /// Store D^{1/alpha} instead of D.
    #[arg(long)]
    pub root: bool,
    /// Work in the original coordinates instead of rescaling to unit diameter.
    #[arg(long)]
    pub no_rescale: bool,
    /// Matrix CSV; the metadata sidecar goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClusterArgs {
    /// Precomputed matrix (with its sidecar).
    #[arg(long, conflicts_with_all = ["input", "alpha_sweep"], required_unless_present = "input")]
    pub matrix: Option<PathBuf>,
    /// Point cloud CSV; labels in it serve as truth unless --truth is given.
    #[arg(long = "in", value_name = "CSV", requires = "alpha_sweep")]
    pub input: Option<PathBuf>,
    /// Powers to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha_sweep: Option<Vec<f64>>,
    #[arg(long, default_value = "complete")]
    pub graph: GraphKind,
    /// Number of clusters.
    #[arg(long)]
    pub m: usize,
    /// Labels file: one label per line, or the last column of a CSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Points with this truth label are clustered but not scored.
    #[arg(long)]
    pub ignore_label: Option<usize>,
    /// Intrinsic dimension for the feasibility audit (default: cloud dimension).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Initial medoids: build or farthest.
    #[arg(long, default_value = "build")]
    pub init: Init,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AlphaBoundArgs {
    /// covering, geodesic, discontinuous or clutter.
    pub formula: String,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Covering constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long)]
    pub geodesic_bound: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Offset radius; the discontinuous bound is minimized over r when absent.
    #[arg(long)]
    pub r: Option<f64>,
    /// Signal proportion of the clutter model.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CvSweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub d_list: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "theta_list",
        required_unless_present = "theta_list"
    )]
    pub alpha_list: Option<Vec<f64>>,
    /// Powers given as alpha / d.
    #[arg(long, value_delimiter = ',')]
    pub theta_list: Option<Vec<f64>>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MacroArgs {
    /// uniform, uniform(d), clutter(d,lambda) or two-level(a0,a1,lo:hi/lo:hi;...).
    #[arg(long)]
    pub density: String,
    #[arg(long)]
    pub alpha: f64,
    /// Start point, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "to"
    )]
    pub from: Option<Vec<f64>>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "from"
    )]
    pub to: Option<Vec<f64>>,
    /// Labeled probe CSV; runs the feasibility check across labels.
    #[arg(long, conflicts_with = "from", required_unless_present = "from")]
    pub probes: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    pub resolution: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub floor: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Manifest written next to an earlier run's outputs.
    pub manifest: PathBuf,
    /// Where the re-run writes (default: `replay` beside the manifest).
    #[arg(long)]
    pub into: Option<PathBuf>,
}
