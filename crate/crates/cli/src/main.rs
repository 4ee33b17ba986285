mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "nataf-link",
    version,
    about = "Normal-space correlations for Gaussian copulas"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve rho_z for one marginal pair.
    Solve(SolveArgs),
    /// Map a whole correlation matrix R_X to R_Z.
    Matrix(MatrixArgs),
    /// Tabulate the link rho_x = G(rho_z) as CSV.
    Curve(CurveArgs),
    /// Recompute one of the reference tables.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
pub struct LinkArgs {
    /// Fixed polynomial degree.
    #[arg(long, conflicts_with = "auto_degree")]
    pub degree: Option<usize>,
    /// Select the degree automatically (the default).
    #[arg(long)]
    pub auto_degree: bool,
    /// Stopping bound on the gap between successive polynomials.
    #[arg(long, default_value_t = 1e-4)]
    pub delta: f64,
    /// Degree increment used by the selection.
    #[arg(long, default_value_t = 2)]
    pub step: usize,
    /// Always use the generic polynomial route.
    #[arg(long)]
    pub no_closed_form: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Poly,
    Bisect,
    Closed,
}

#[derive(Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub pair: PathBuf,
    /// Target correlation; overrides the value in the pair file.
    #[arg(long, allow_hyphen_values = true)]
    pub rho_x: Option<f64>,
    #[command(flatten)]
    pub link: LinkArgs,
    /// Defaults to the closed form when the pair has one, else the polynomial.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Bisection tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Repair {
    Clip,
}

#[derive(Args)]
pub struct MatrixArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, value_enum, default_value = "clip")]
    pub repair: Repair,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub pair: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub grid: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Args)]
pub struct BenchArgs {
    /// t1, t2, t3 or t4.
    #[arg(long)]
    pub table: nataf_link::tables::Table,
    /// Monte-Carlo samples per row; 0 skips the check.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 20240601)]
    pub seed: u64,
    /// Bisection tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long)]
    pub json: bool,
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
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Matrix(a) => commands::matrix(&a),
        Command::Curve(a) => commands::curve(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
