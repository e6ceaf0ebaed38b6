use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "phasekit", version, about = "Attractor reconstruction and analysis of nonlinear time series")]
pub struct Cli {
    /// Seed for every random choice (network initialization).
    #[arg(long, global = true, default_value_t = phasekit::DEFAULT_SEED)]
    pub seed: u64,

    /// Where to write the JSON result (the CSV trajectory for `simulate`).
    /// Relative paths resolve against PHASEKIT_OUTPUT_DIR when it is set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a trajectory of a reference system.
    Simulate(SimulateArgs),
    /// Mutual-information profile and first-minimum delay.
    Mi(MiArgs),
    /// Delay embedding of a scalar series.
    Embed(EmbedArgs),
    /// Correlation or generalized dimension.
    Dimension(DimensionArgs),
    /// Lyapunov exponents.
    Lyapunov(LyapunovArgs),
    /// Reduced evolution model identification.
    Identify(IdentifyArgs),
    /// One-step neighborhood forecast with model selection.
    Predict(PredictArgs),
    /// Stepwise reconstruction over feature subsets and delays.
    Stepwise(StepwiseArgs),
    /// Fourier-descriptor symmetry comparison of two closed contours.
    Symmetry(SymmetryArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Input CSV, one column per channel.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Zero-based channel to analyze.
    #[arg(long, default_value_t = 0)]
    pub column: usize,
    /// Sampling step (ignored with --time-column).
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// The first line is a header.
    #[arg(long)]
    pub header: bool,
    /// The first column holds uniformly spaced sample times.
    #[arg(long)]
    pub time_column: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedParams {
    /// Embedding dimension.
    #[arg(long)]
    pub m: usize,
    /// Delay in samples; chosen from the mutual-information minimum when omitted.
    #[arg(long)]
    pub tau: Option<usize>,
    /// Theiler window in samples; defaults to tau*(m-1)+1.
    #[arg(long)]
    pub theiler: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Catalog name: lorenz, rossler, henon, test42, example2 or example3.
    #[arg(long)]
    pub system: String,
    /// Number of samples written.
    #[arg(long)]
    pub steps: usize,
    /// Sampling step of flows.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// RK4 steps per sample.
    #[arg(long, default_value_t = 1)]
    pub substeps: usize,
    /// Samples discarded before recording.
    #[arg(long, default_value_t = 0)]
    pub transient: usize,
    /// Initial state, comma-separated; the catalog default otherwise.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Components to record, comma-separated; all by default.
    #[arg(long, value_delimiter = ',')]
    pub observe: Option<Vec<usize>>,
    /// Include a leading time column.
    #[arg(long)]
    pub with_time: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest delay examined; defaults to min(100, N/4).
    #[arg(long)]
    pub tau_max: Option<usize>,
    /// Histogram bins per axis; defaults to ceil(N^(1/3)) clamped to [8, 64].
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub embed: EmbedParams,
    /// Write the embedded vectors here as CSV.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DimensionArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub embed: EmbedParams,
    /// Order of the generalized dimension; 2 uses the correlation integral.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub q: f64,
    /// Radii in the geometric grid spanning [1e-3, 1] x the bounding diagonal. At the
    /// default, q != 2 uses dyadic box sides instead.
    #[arg(long, default_value_t = phasekit::invariants::DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    /// Manual fit range in absolute radius units.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub fit_range: Option<Vec<f64>>,
    /// Write the log-log curve here as CSV.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LyapunovMethod {
    Wolf,
    Rosenstein,
    Kantz,
    Benettin,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LyapunovArgs {
    #[arg(long, value_enum)]
    pub method: LyapunovMethod,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub theiler: Option<usize>,
    /// Rosenstein/Kantz: divergence horizon in samples; defaults to 10*tau.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Kantz: neighborhood radius as a fraction of the bounding diagonal.
    #[arg(long, default_value_t = 0.01)]
    pub eps_frac: f64,
    /// Rosenstein/Kantz: use every n-th reference point.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Rosenstein/Kantz: manual fit window of horizons.
    #[arg(long, num_args = 2, value_names = ["FROM", "TO"])]
    pub fit_window: Option<Vec<usize>>,
    /// Wolf: evolution steps between inspections; defaults to tau.
    #[arg(long)]
    pub evolve: Option<usize>,
    /// Wolf: replacement threshold as a fraction of the bounding diagonal.
    #[arg(long, default_value_t = 0.1)]
    pub max_len_frac: f64,
    /// Wolf: minimum replacement distance as a fraction of the bounding diagonal.
    #[arg(long, default_value_t = 1e-4)]
    pub min_len_frac: f64,
    /// Wolf: minimum cosine between old and new separation directions.
    #[arg(long, default_value_t = 0.8)]
    pub angle_tol: f64,
    /// Wolf: report bits per sample.
    #[arg(long)]
    pub bits: bool,
    /// Benettin: number of exponents; defaults to m (or the system dimension).
    #[arg(long)]
    pub n_exp: Option<usize>,
    /// Benettin data mode: neighbors per local Jacobian; defaults to 2m+1.
    #[arg(long)]
    pub k_neighbors: Option<usize>,
    /// Benettin: samples between re-orthonormalizations.
    #[arg(long, default_value_t = 1)]
    pub renorm: usize,
    /// Benettin: alignment samples excluded from the average.
    #[arg(long, default_value_t = 0)]
    pub warmup: usize,
    /// Benettin data mode: samples spanned by each local Jacobian.
    #[arg(long, default_value_t = 1)]
    pub jacobian_step: usize,
    /// Benettin: accumulated steps (0 uses the whole embedding in data mode).
    #[arg(long, default_value_t = 0)]
    pub steps: usize,
    /// Benettin exact mode: reference system instead of data.
    #[arg(long)]
    pub system: Option<String>,
    /// Benettin exact mode: sampling step of flows.
    #[arg(long, default_value_t = 0.01)]
    pub system_dt: f64,
    /// Benettin exact mode: RK4 steps per sample.
    #[arg(long, default_value_t = 1)]
    pub substeps: usize,
    /// Write the divergence curve here as CSV.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IdentifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub embed: EmbedParams,
    /// Model order (number of principal components).
    #[arg(long)]
    pub n: usize,
    /// Time basis terms separated by ';', e.g. "t^2;t;sin(0.5,0)".
    #[arg(long, default_value = "")]
    pub basis: String,
    #[arg(long, value_enum, default_value_t = Mode::Discrete)]
    pub mode: Mode,
    /// Continuous mode: moving-average window before differencing.
    #[arg(long)]
    pub smoother: Option<usize>,
    /// Write the fitted model JSON here.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorArg {
    Mean,
    Linear,
    Net,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub embed: EmbedParams,
    /// Neighbors used for the local model and the neighbor error; defaults to 2m+1.
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// Candidate feature pipelines, features separated by ';', e.g. "m1(0,1);m2(1,2)".
    /// Without any, the local averaging model is the only candidate.
    #[arg(long)]
    pub features: Vec<String>,
    #[arg(long, value_enum, default_value_t = RegressorArg::Linear)]
    pub regressor: RegressorArg,
    /// Network hidden units.
    #[arg(long, default_value_t = 4)]
    pub hidden: usize,
    /// Network training restarts.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Network training iterations per restart.
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// No forecast when the winning neighbor error reaches this value.
    #[arg(long)]
    pub gate: Option<f64>,
    /// Stability threshold for the reported composite criterion.
    #[arg(long, default_value_t = 0.0)]
    pub lambda_min: f64,
    /// Also score the local model on the last N points against persistence.
    #[arg(long)]
    pub holdout: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StepwiseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Channels used as features; all channels by default.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<usize>>,
    /// Add the structural-stability feature pair built from the local model on --column.
    #[arg(long)]
    pub stability_pair: bool,
    /// Embedding of --column for the structural-stability pair.
    #[arg(long, default_value_t = 2)]
    pub base_m: usize,
    #[arg(long, default_value_t = 1)]
    pub base_tau: usize,
    /// Neighbors for the structural-stability pair.
    #[arg(long, default_value_t = 5)]
    pub neighbors: usize,
    #[arg(long, default_value_t = 1)]
    pub m_min: usize,
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub tau_min: usize,
    #[arg(long, default_value_t = 5)]
    pub tau_max: usize,
    /// Required local stability.
    #[arg(long)]
    pub lambda_min: f64,
    /// Neighborhood radius around the current point.
    #[arg(long)]
    pub radius: f64,
    #[arg(long)]
    pub theiler: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SymmetryArgs {
    /// First contour CSV (m rows x n columns).
    #[arg(long)]
    pub a: PathBuf,
    /// Second contour CSV.
    #[arg(long)]
    pub b: PathBuf,
    /// Keep only this many harmonic pairs before normalizing.
    #[arg(long)]
    pub smoothing: Option<usize>,
    /// Write the normalized spectrum of A here as CSV.
    #[arg(long)]
    pub spectrum_out: Option<PathBuf>,
}
