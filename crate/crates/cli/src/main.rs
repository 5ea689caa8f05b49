//! `monodromy`: command-line driver for classification, normal forms,
//! monodromy, the inverse (Riemann-Hilbert) fit and rationality checks.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "monodromy", version, about = "Monodromy of parameterized linear ODE systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify every pole at every grid point.
    Classify(ClassifyArgs),
    /// Shear and reduce each simple pole to constant form.
    Normalform(NormalformArgs),
    /// Monodromy matrices along the loop plan at every grid point.
    Monodromy(MonodromyArgs),
    /// Fit Fuchsian residues to target monodromy matrices.
    Rhsolve(RhArgs),
    /// Test a candidate expression in Z for invariance and rationality in x.
    Rational(RationalArgs),
    /// Forward monodromy, inverse fit and independent recomputation.
    Roundtrip(RhArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Flags shared by every command.
#[derive(Args, Debug, Clone)]
struct Common {
    /// Input file (system JSON; target JSON for rhsolve).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Integrator tolerance [default: 1e-9; 1e-12 for rhsolve and roundtrip].
    #[arg(long)]
    tol: Option<f64>,
    /// Parameter grid: JSON text or a file holding it. Either a list of
    /// points or one `{start, stop, count}` / value list per coordinate.
    #[arg(long)]
    grid: Option<String>,
    /// Seed for randomized fixtures and sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the command's self-check and report failure through the exit code.
    #[arg(long)]
    verify: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    /// Gauge (series JSON) offered as a regularity witness.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NormalformArgs {
    #[command(flatten)]
    common: Common,
    /// Series truncation order.
    #[arg(long, default_value_t = 20)]
    trunc: i64,
    /// Only this pole (0-based); all simple poles by default.
    #[arg(long)]
    pole: Option<usize>,
}

#[derive(Args, Debug)]
struct MonodromyArgs {
    #[command(flatten)]
    common: Common,
    /// Loop plan JSON; defaults to lassos from a point below the poles.
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RhArgs {
    #[command(flatten)]
    common: Common,
    /// Target fit residual.
    #[arg(long, default_value_t = 1e-8)]
    fit_tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
}

#[derive(Args, Debug)]
struct RationalArgs {
    #[command(flatten)]
    common: Common,
    /// Expression in the entries of Z, e.g. `z11/z22` or `dz(1,1,1)/z11`.
    #[arg(long)]
    candidate: String,
    /// Largest degree tried.
    #[arg(long, default_value_t = 8)]
    m_max: usize,
    #[arg(long)]
    plan: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify(a) => commands::classify(a),
        Command::Normalform(a) => commands::normalform(a),
        Command::Monodromy(a) => commands::monodromy(a),
        Command::Rhsolve(a) => commands::rhsolve(a),
        Command::Rational(a) => commands::rational(a),
        Command::Roundtrip(a) => commands::roundtrip(a),
    };
    match result {
        Ok(commands::Outcome::Passed) => ExitCode::SUCCESS,
        Ok(commands::Outcome::VerificationFailed(why)) => {
            commands::diagnose("verification", &why);
            ExitCode::from(1)
        }
        Err(commands::Failure::Input(e)) => {
            commands::diagnose("input", &format!("{e:#}"));
            ExitCode::from(2)
        }
        Err(commands::Failure::Module(e)) => {
            commands::diagnose("computation", &format!("{e:#}"));
            ExitCode::from(1)
        }
    }
}
