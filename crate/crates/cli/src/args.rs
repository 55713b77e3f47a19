use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "shortcut-ring", version, about = "Stuart-Landau ring with one shortcut: spectra, Hopf branches, stability and simulation")]
pub struct Cli {
    /// Directory for output files; without it the primary output goes to stdout.
    #[arg(long, global = true, env = "SHORTCUT_RING_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of the coupling matrix with class labels and residuals.
    Spectrum(SpectrumArgs),
    /// Ordered Hopf bifurcation sequence of the zero solution.
    Branches(BranchesArgs),
    /// Stabilization threshold per branch.
    Eckhaus(EckhausArgs),
    /// Direct integration, optionally measuring the attractor.
    Simulate(SimulateArgs),
    /// Convergence studies of the asymptotic approximations.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RingArgs {
    /// Named parameter set; explicit flags override its values.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Number of oscillators.
    #[arg(long)]
    pub n: Option<usize>,
    /// Source node of the shortcut (1-based).
    #[arg(long)]
    pub ell: Option<usize>,
    /// Shortcut strength.
    #[arg(long)]
    pub s: Option<f64>,
    /// Linear growth rate of every node [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Intrinsic frequency [default: 2.5].
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig4a,
    Fig4b,
    Fig4c,
    Fig4d,
    Fig4e,
    Fig4f,
    Fig5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemKind {
    Full,
    Truncated,
    Inhom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Small-s approximate variational matrix.
    Approx,
    /// Large-s approximate matrix of the inhomogeneous ring.
    ApproxLargeS,
    /// Exact rotating-frame Jacobian at Newton orbits.
    Exact,
    /// Monodromy matrix over one period.
    Monodromy,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BranchesArgs {
    #[command(flatten)]
    pub ring: RingArgs,
}

#[derive(Debug, Args)]
pub struct EckhausArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    #[arg(long, value_enum, default_value = "full")]
    pub system: SystemKind,
    /// Defaults to `approx` for fig4a-c and `exact` otherwise.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Alpha range past onset scanned per branch.
    #[arg(long, default_value_t = shortcut_ring::floquet::DEFAULT_SPAN)]
    pub span: f64,
    /// Comma-separated branch indices; all branches by default.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    #[arg(long, value_enum, default_value = "full")]
    pub system: SystemKind,
    /// `zero`, `random` (needs --seed) or `branch:k=K`.
    #[arg(long, default_value = "random")]
    pub init: String,
    /// With a branch seed, sets alpha to onset + eps.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Relative noise on the initial state (needs --seed).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Modulus of the random initial components.
    #[arg(long, default_value_t = 1e-2)]
    pub amplitude: f64,
    /// Seed of the ChaCha8 generator for random states and noise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// End of the integration interval, starting from t = 0.
    #[arg(long, allow_hyphen_values = true)]
    pub t_final: f64,
    /// Output samples after the initial state.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Relative tolerance of the adaptive integrator.
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    /// Absolute tolerance of the adaptive integrator.
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// Measure amplitude profile and frequency on the tail.
    #[arg(long)]
    pub measure: bool,
    /// Time discarded before measuring; defaults to half the run.
    #[arg(long)]
    pub transient: Option<f64>,
    /// Drift tolerance for the convergence flag.
    #[arg(long, default_value_t = 1e-3)]
    pub rel_tol: f64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Number of oscillators.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Source node of the shortcut (1-based).
    #[arg(long, default_value_t = 6)]
    pub ell: usize,
}
