use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "krein-spectra",
    version,
    about = "Complex spectra, exceptional points and bounds for PT-symmetric, Herbst/Squire and alpha^2-dynamo operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the interpolating family in nu at fixed b and g.
    InterpSweep(InterpSweepArgs),
    /// Sweep the Herbst box in b, with the real-to-complex crossing table.
    Herbst(HerbstArgs),
    /// Squire eigenvalues with their Y classification and asymptotic predictions.
    Squire(SquireArgs),
    /// Sweep the alpha^2-dynamo in the profile scale C.
    Dynamo(DynamoArgs),
    /// Print the supremum bound, the critical level and the Herbst crossing table.
    Bounds(BoundsArgs),
    /// Refine a single exceptional point or a coalescence of two.
    EpLocate(EpLocateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct InterpSweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub g: f64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub nu_min: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub nu_max: f64,
    #[arg(long, default_value_t = 101)]
    pub nu_steps: usize,
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct HerbstArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub b_min: f64,
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    pub b_max: f64,
    #[arg(long, default_value_t = 141)]
    pub b_steps: usize,
    #[arg(long, default_value_t = 12)]
    pub levels: usize,
    /// Emit E/b in the energy columns.
    #[arg(long, conflicts_with = "mu")]
    pub rescaled: bool,
    /// Emit b^2 E in the energy columns.
    #[arg(long)]
    pub mu: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SquireArgs {
    #[arg(long, conflicts_with_all = ["alpha_tilde", "reynolds"], required_unless_present = "alpha_tilde")]
    pub epsilon: Option<f64>,
    #[arg(long, requires = "reynolds")]
    pub alpha_tilde: Option<f64>,
    #[arg(long, requires = "alpha_tilde")]
    pub reynolds: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub levels: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BcArg {
    Idealized,
    Realistic,
}

#[derive(Debug, Args)]
pub struct DynamoArgs {
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    /// `fig1`, `constant:<alpha0>` or a file of polynomial coefficients.
    #[arg(long, default_value = "fig1")]
    pub profile: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c_min: f64,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub c_max: f64,
    #[arg(long, default_value_t = 59)]
    pub c_steps: usize,
    #[arg(long, value_enum, default_value_t = BcArg::Realistic)]
    pub bc: BcArg,
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    /// Keep the Im < 0 members of conjugate pairs in CSV output.
    #[arg(long)]
    pub full_pairs: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Interp,
    Herbst,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub g: f64,
    #[arg(long, default_value_t = 6)]
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Nu,
    B,
}

#[derive(Debug, Args)]
pub struct EpLocateArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// Herbst crossing index.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub g: f64,
    /// Real part of the seed eigenvalue mu = b^2 E.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu_im: f64,
    /// Parameter varied in a one-parameter search.
    #[arg(long, value_enum, default_value_t = Axis::B)]
    pub vary: Axis,
    /// Solve for a coalescence of two exceptional points in (nu, b).
    #[arg(long)]
    pub two_parameter: bool,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Also write the record to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
