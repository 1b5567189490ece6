use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liouville::domain_file::read_domain;
use liouville::geometry::Domain2D;
use liouville::report::Status;
use liouville::Error;

mod commands;
mod verify;

#[derive(Parser)]
#[command(name = "liouville", version, about = "Maximal solutions of −Δu + 4e^{2u} = 0 and their boundary behaviour")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Domain description file.
    #[arg(long)]
    domain: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Solve on {d > h_trim} with expansion data.
    Trimmed,
    /// Solve up to the boundary through the regularized unknown.
    Regularized,
    /// Solve with constant boundary data n.
    Data,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    h_grid: f64,
    #[arg(long, value_enum, default_value_t = Mode::Regularized)]
    mode: Mode,
    #[arg(long, default_value_t = 0.05)]
    h_trim: f64,
    /// Expansion order of the trimmed data (1 or 2).
    #[arg(long, default_value_t = 2)]
    order: u8,
    /// Boundary value for `--mode data`.
    #[arg(long, default_value_t = 4.0)]
    n: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Dirichlet problem and write u, v, w and a report.
    Solve(SolveArgs),
    /// Sample the closed-form disk or annulus solution on the grid.
    Exact {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        h_grid: f64,
    },
    /// Build the collar profile w₀ by the contraction iteration.
    W0 {
        #[command(flatten)]
        common: Common,
        /// Chart half-width.
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
        /// Rows in T.
        #[arg(long, default_value_t = 40)]
        nt: usize,
        /// Curve parameter of the chart base point.
        #[arg(long, default_value_t = 0.0)]
        s0: f64,
        #[arg(long, default_value_t = 0)]
        component: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Run the verification suite and write report.json and report.csv.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        h_grid: f64,
        #[arg(long, default_value_t = 0.1)]
        theta: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// Refinement study against the closed-form solution.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Comma-separated grid spacings, coarse to fine.
        #[arg(long, value_delimiter = ',', default_value = "0.015625,0.0078125,0.00390625")]
        h_list: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Trimmed)]
        mode: Mode,
        #[arg(long, default_value_t = 0.05)]
        h_trim: f64,
        #[arg(long, default_value_t = 2)]
        order: u8,
    },
}

/// Exit-code contract.
#[derive(Debug)]
enum Outcome {
    Pass,
    CheckFailed,
    Config(String),
    NotConverged(String),
    Insufficient,
}

impl Outcome {
    fn code(&self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::CheckFailed => 1,
            Outcome::Config(_) => 2,
            Outcome::NotConverged(_) => 3,
            Outcome::Insufficient => 4,
        }
    }

    fn from_status(s: Status) -> Self {
        match s {
            Status::Pass => Outcome::Pass,
            Status::Fail => Outcome::CheckFailed,
            Status::InsufficientResolution => Outcome::Insufficient,
        }
    }
}

impl From<Error> for Outcome {
    fn from(e: Error) -> Self {
        match e {
            Error::NotContractive { .. } | Error::FixedPointStalled { .. } | Error::Overflow { .. } | Error::LinearSolver(_) => {
                Outcome::NotConverged(e.to_string())
            }
            other => Outcome::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Outcome {
    fn from(e: std::io::Error) -> Self {
        Outcome::Config(e.to_string())
    }
}

fn load(common: &Common) -> Result<Domain2D, Outcome> {
    let d = read_domain(&common.domain)?;
    std::fs::create_dir_all(&common.out)?;
    Ok(d)
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<(), Outcome> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Outcome::Config(e.to_string()))?;
    std::fs::write(dir.join(name), s + "\n")?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let r = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Exact { common, h_grid } => commands::exact(&common, h_grid),
        Command::W0 {
            common,
            theta,
            nt,
            s0,
            component,
            tol,
        } => commands::w0(&common, theta, nt, s0, component, tol),
        Command::Verify {
            common,
            h_grid,
            theta,
            alpha,
        } => verify::run(&common, h_grid, theta, alpha),
        Command::Convergence {
            common,
            h_list,
            mode,
            h_trim,
            order,
        } => commands::convergence(&common, &h_list, mode, h_trim, order),
    };
    r.unwrap_or_else(|o| o)
}

fn main() -> ExitCode {
    let outcome = run(Cli::parse());
    match &outcome {
        Outcome::Config(m) => eprintln!("error: {m}"),
        Outcome::NotConverged(m) => eprintln!("not converged: {m}"),
        Outcome::CheckFailed => eprintln!("one or more checks failed"),
        Outcome::Insufficient => eprintln!("grid too coarse for refinement checks"),
        Outcome::Pass => {}
    }
    ExitCode::from(outcome.code())
}
