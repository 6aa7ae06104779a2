use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Numerical geometry of spacelike submanifolds through the light cone.
///
/// Every command prints a JSON report with the keys `command`, `params`,
/// `results`, `quadrature`, `tolerances` and `pass`. Exit status: 0 when the
/// report passes, 1 when it fails, 2 on usage errors.
#[derive(Debug, Parser)]
#[command(name = "lightcone", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    #[serde(skip)]
    pub format: Format,
    /// No human summary on stderr.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub quiet: bool,
    /// Leave wall-time out of the report (byte-identical reruns).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub no_meta: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scalar fields on the sphere.
    #[command(subcommand)]
    Field(FieldCommand),
    /// Conformal curvature of `e^{2f} g₀`.
    #[command(subcommand)]
    Conformal(ConformalCommand),
    /// Catalog immersions: frames, shape operators and curvature identities.
    #[command(subcommand)]
    Embed(EmbedCommand),
    /// Integral identities by quadrature.
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Solve the constant-curvature equation on S².
    Solve(SolveArgs),
    /// Fit a field against the explicit solution family.
    Classify(ClassifyArgs),
    /// Solve from random initial data for batches of seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum FieldCommand {
    /// Value, gradient and Laplacian at points.
    Eval(FieldEvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum ConformalCommand {
    /// Scalar curvature, `<H,H>`, residual of the equation and volume.
    Report(ConformalArgs),
}

#[derive(Debug, Subcommand)]
pub enum EmbedCommand {
    /// Pointwise invariants of a catalog immersion.
    Report(EmbedArgs),
}

#[derive(Debug, Subcommand)]
pub enum AuditCommand {
    /// Divergence identity valid for every frame and every `a`.
    Minkowski(AuditArgs),
    /// The two formulas for parallel mean curvature.
    Parallel(AuditArgs),
    /// The integral inequality with its equality case.
    Inequality(AuditArgs),
    /// Beltrami's equation, pointwise and integrated.
    Beltrami(AuditArgs),
}

/// Where a scalar field comes from: an expression, a coefficient file or a
/// member `(v, k)` of the explicit family.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FieldSource {
    /// Expression in x1…x{n+1}, e.g. "log(1/(2 + 1.732*x1))".
    #[arg(long, allow_hyphen_values = true)]
    pub field: Option<String>,
    /// Spherical-harmonic coefficient file (n = 2).
    #[arg(long, value_name = "PATH")]
    pub coeffs: Option<PathBuf>,
    /// Timelike unit vector `v` (comma list) of a family member.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub v: Option<String>,
    /// Dimension of the sphere for expressions.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FieldEvalArgs {
    #[command(flatten)]
    pub source: FieldSource,
    /// `k` of a family member given by `--v`.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// `poles`, `random:<count>` or `x1,x2,x3;…`.
    #[arg(long, default_value = "poles", allow_hyphen_values = true)]
    pub points: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Central differences with this step instead of exact derivatives.
    #[arg(long, value_name = "H")]
    pub fd: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConformalArgs {
    #[command(flatten)]
    pub source: FieldSource,
    /// `k` of the equation (and of a family member given by `--v`).
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value = "poles", allow_hyphen_values = true)]
    pub points: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "H")]
    pub fd: Option<f64>,
    /// Polar nodes of the volume quadrature.
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
}

/// A catalog immersion and the parameters it needs.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ExampleArgs {
    /// round-graph, graph, obata-graph, snvr, flat-cylinder,
    /// poincare-halfplane, euclid-graph or torus.
    #[arg(long, default_value = "torus")]
    pub example: String,
    #[command(flatten)]
    pub source: FieldSource,
    /// `k` of obata-graph.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Radius of snvr.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Centre-line radius of the torus.
    #[arg(long = "R", default_value_t = 2.0)]
    #[serde(rename = "R")]
    pub big_r: f64,
    /// Tube radius of the torus.
    #[arg(long, default_value_t = 0.7)]
    pub rho: f64,
    /// Rescale the frame to `(ξ/φ, φη)` with a chart function of u, w.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub example: ExampleArgs,
    /// `random:<count>` or chart points `u1,u2;…`.
    #[arg(long, default_value = "random:5", allow_hyphen_values = true)]
    pub points: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    #[command(flatten)]
    pub example: ExampleArgs,
    /// Constant vector `a` (comma list); defaults to e₀.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Quadrature resolution N.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Replaces the resolution-dependent tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also integrate at N/4 and N/2.
    #[arg(long)]
    pub convergence: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Seed of the random initial data and of the check points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub lmax: usize,
    /// Initial data (expression in x1, x2, x3); random when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub field: Option<String>,
    /// Initial data from a coefficient file.
    #[arg(long, value_name = "PATH")]
    pub coeffs: Option<PathBuf>,
    /// Convergence threshold on the grid max-norm of the residual.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 60)]
    pub max_iter: usize,
    /// Random points of the independent residual check.
    #[arg(long, default_value_t = 300)]
    pub check_points: usize,
    /// Write the solution coefficients to a file.
    #[arg(long, value_name = "PATH")]
    pub save_coeffs: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: FieldSource,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Values of k (comma list).
    #[arg(long, default_value = "0.5,1,4")]
    pub k: String,
    /// Number of seeds per k.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub lmax: usize,
    #[arg(long, default_value_t = 200)]
    pub check_points: usize,
}
