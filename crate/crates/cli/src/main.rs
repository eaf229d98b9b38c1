use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "toric", version, about = "Toric curves on the sphere, their singularities and Toda metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Input JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for randomized consistency checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Report path (default: `<out>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub common: Common,
    /// `re0,re1,im0,im1[,nx,ny]`, inline JSON, or a JSON file.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Finite-difference step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Radius excluded around singular points.
    #[arg(long)]
    pub safety: Option<f64>,
    /// Comma-separated radii for cone-angle fits.
    #[arg(long)]
    pub radii: Option<String>,
    /// Report path (default: `<out>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the curve for prescribed singular data and verify it.
    Construct(Common),
    /// Generate the curve of a character ensemble.
    Ensemble(EnsembleArgs),
    /// Classify the singular points of a curve.
    Classify(Common),
    /// Conformal factors, Toda residuals and cone-angle fits on a grid.
    Metrics(MetricsArgs),
    /// Candidate degree vectors and data at infinity.
    EnumerateInfinity(Common),
    /// The rho vector of given singular data or of a scaled family.
    Rho(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Construct(a) => commands::construct(a),
        Command::Ensemble(a) => commands::ensemble(a),
        Command::Classify(a) => commands::classify(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::EnumerateInfinity(a) => commands::enumerate_infinity(a),
        Command::Rho(a) => commands::rho(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
