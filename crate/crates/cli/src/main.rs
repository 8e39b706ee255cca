//! `distcurv` command-line front end.
//!
//! Exit codes: 0 success, 1 property violation, 2 usage or validation error,
//! 3 numeric degeneracy, 4 not contact, 5 no positive stretch root,
//! 6 search schedule exhausted, 7 method not applicable.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use distcurv::fields::GridSpec;
use distcurv::Error;

#[derive(Parser, Debug)]
#[command(
    name = "distcurv",
    version,
    about = "Curvature of plane distributions and curvature prescription for contact structures"
)]
struct Cli {
    /// Worker threads for per-point work (default: all cores).
    #[arg(long, global = true, env = "DISTCURV_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Curvature report of a plane field on a grid.
    Curvature(CurvatureArgs),
    /// Contact and bi-contact checks.
    Check(CheckArgs),
    /// Build a metric with prescribed curvature.
    Prescribe(PrescribeArgs),
    /// Closed forms against the curvature oracle on the built-in models.
    Validate(ValidateArgs),
    /// List the built-in models, or print one as JSON.
    Models(ModelsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

/// Grid size: `N` for an `N x N x N` grid or `N1,N2,N3`.
fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums =
        parts.iter().map(|p| p.parse::<usize>().map_err(|e| format!("`{p}`: {e}"))).collect::<Result<Vec<_>, _>>()?;
    let n = match nums.as_slice() {
        [n] => [*n; 3],
        [a, b, c] => [*a, *b, *c],
        _ => return Err("expected N or N1,N2,N3".into()),
    };
    if n.contains(&0) {
        return Err("grid sizes must be positive".into());
    }
    Ok(GridSpec { n })
}

#[derive(Args, Debug)]
pub struct CurvatureArgs {
    /// Built-in model name or JSON model file.
    #[arg(long)]
    pub model: String,
    /// Named distribution of the model.
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value = "16", value_parser = parse_grid)]
    pub grid: GridSpec,
    /// Stretch factor along the unit normal, applied before measuring.
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("what").required(true).multiple(true).args(["contact", "bicontact"]))]
pub struct CheckArgs {
    #[arg(long)]
    pub model: String,
    /// Distributions or one-forms that must be contact.
    #[arg(long, num_args = 1..)]
    pub contact: Vec<String>,
    /// Two distributions or one-forms that must form a bi-contact pair.
    #[arg(long, num_args = 2, value_names = ["FIRST", "SECOND"])]
    pub bicontact: Vec<String>,
    #[arg(long, default_value = "16", value_parser = parse_grid)]
    pub grid: GridSpec,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct PrescribeArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub dist: String,
    /// sectional, gaussian or sectional-bicontact.
    #[arg(long)]
    pub method: String,
    /// Target curvature as an expression in u1, u2, u3.
    #[arg(long, allow_hyphen_values = true)]
    pub target: String,
    /// Second plane field of the bi-contact pair.
    #[arg(long)]
    pub eta: Option<String>,
    /// Named adapted frame; the bi-contact method uses the model's only
    /// frame when this is omitted.
    #[arg(long)]
    pub frame: Option<String>,
    #[arg(long, default_value = "16", value_parser = parse_grid)]
    pub grid: GridSpec,
    /// Largest accepted residual.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta_disc: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub delta_neg: f64,
    /// Also write the stretch field and final metric sampled on the grid.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// lemma31, lemma32, lemma33, frame-invariance, fd or sign-calibration.
    #[arg(long)]
    pub suite: String,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Defaults to the suite's own tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct ModelsArgs {
    /// Print this model as JSON instead of listing.
    pub name: Option<String>,
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    Violation,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::VerificationFailed { .. } => 1,
        Error::Parse(_)
        | Error::InvalidChart(_)
        | Error::InvalidParameter(_)
        | Error::Schema { .. }
        | Error::Unknown { .. }
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::Eval { .. }
        | Error::NotPositiveDefinite { .. }
        | Error::SingularMetric { .. }
        | Error::Degenerate { .. }
        | Error::NotOrthonormal { .. } => 3,
        Error::NotContact { .. } => 4,
        Error::NoPositiveRoot { .. } | Error::NonpositiveSolution { .. } => 5,
        Error::ScheduleExhausted { .. } => 6,
        Error::NotApplicable(_) => 7,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let result = match &cli.command {
        Command::Curvature(a) => commands::curvature(a, &mut out),
        Command::Check(a) => commands::check(a, &mut out),
        Command::Prescribe(a) => commands::prescribe(a, &mut out),
        Command::Validate(a) => commands::validate(a, &mut out),
        Command::Models(a) => commands::models(a, &mut out),
    };
    let flushed = out.flush();
    match (result, flushed) {
        (Ok(Status::Ok), Ok(())) => ExitCode::SUCCESS,
        (Ok(Status::Violation), Ok(())) => ExitCode::from(1),
        (Err(e), _) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        (_, Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
