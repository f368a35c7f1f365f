use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rex_cli::commands::{self, Af0Spec};
use rex_core::Tolerances;

/// Solver toolkit for stochastic linear rational-expectations models.
#[derive(Parser)]
#[command(name = "rex", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regularity, well-posedness, and eigenvalue report.
    Check { model: PathBuf },
    /// Eigenvalues of the characteristic matrix polynomial.
    Eig { model: PathBuf },
    /// Solve the model for a chosen free parameter and write kernels.
    Solve {
        model: PathBuf,
        /// `lsq`, `stable`, or a path to a matrix file.
        #[arg(long)]
        af0: Af0Spec,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        /// Directory for G.csv, F.csv, xbar.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a selection criterion and report the outcome.
    Select {
        model: PathBuf,
        /// `stable` or `lsq`.
        #[arg(long)]
        criterion: String,
    },
    /// Eigenvalue loci of [z^2 eps Ahat - z I + A] over a gain grid.
    #[command(name = "sweep-gain")]
    SweepGain {
        model: PathBuf,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Directory for loci.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal state-space realizations of G[z] and F[z].
    Realize {
        model: PathBuf,
        /// `lsq`, `stable`, or a path to a matrix file.
        #[arg(long)]
        af0: Af0Spec,
    },
    /// Monte-Carlo simulation of the solved model.
    Simulate {
        model: PathBuf,
        /// `lsq`, `stable`, or a path to a matrix file.
        #[arg(long)]
        af0: Af0Spec,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        /// Directory for mean_error.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = Tolerances::default();
    let result = match &cli.command {
        Command::Check { model } => commands::cmd_check(model, &tol),
        Command::Eig { model } => commands::cmd_eig(model, &tol),
        Command::Solve {
            model,
            af0,
            horizon,
            out,
        } => commands::cmd_solve(model, af0, *horizon, out.as_deref(), &tol),
        Command::Select { model, criterion } => commands::cmd_select(model, criterion, &tol),
        Command::SweepGain {
            model,
            from,
            to,
            steps,
            out,
        } => commands::cmd_sweep(model, *from, *to, *steps, out.as_deref(), &tol),
        Command::Realize { model, af0 } => commands::cmd_realize(model, af0, &tol),
        Command::Simulate {
            model,
            af0,
            paths,
            horizon,
            out,
        } => commands::cmd_simulate(model, af0, *paths, *horizon, out.as_deref(), &tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code.clamp(0, 255) as u8)
        }
    }
}
