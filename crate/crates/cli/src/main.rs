mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use imres_core::SchemeKind;

use commands::{Failure, GradcheckArgs, StabilityArgs};

/// Implicit residual networks: stability lab, gradient checks, datasets and
/// experiment runs.
#[derive(Parser)]
#[command(name = "imres", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    ForwardEuler,
    BackwardEuler,
    Trapezoidal,
    Verlet,
    All,
}

impl SchemeArg {
    fn schemes(self) -> Vec<SchemeKind> {
        match self {
            SchemeArg::ForwardEuler => vec![SchemeKind::ForwardEuler],
            SchemeArg::BackwardEuler => vec![SchemeKind::BackwardEuler],
            SchemeArg::Trapezoidal => vec![SchemeKind::Trapezoidal],
            SchemeArg::Verlet => vec![SchemeKind::Verlet],
            SchemeArg::All => SchemeKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetName {
    Regression,
    Spirals,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the linear test system and sweep spectral radii.
    Stability {
        #[arg(long, value_enum, default_value = "all")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 50.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        y0: f64,
        #[arg(long, default_value_t = 0.02, allow_negative_numbers = true)]
        z0: f64,
        #[arg(long, default_value = "stability")]
        out: PathBuf,
        /// Also write an SVG phase portrait per scheme.
        #[arg(long)]
        svg: bool,
    },
    /// Compare analytic gradients with central differences on a random model.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        width: usize,
        /// Drop the implicit term from the weight gradient.
        #[arg(long)]
        paper_param_grad: bool,
    },
    /// Train a model from a JSON experiment file.
    Train {
        config: PathBuf,
        /// Overrides the output directory of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a benchmark dataset as train.csv and val.csv.
    Dataset {
        #[arg(long, value_enum)]
        name: DatasetName,
        #[arg(long)]
        out: PathBuf,
        /// Seed for the random regression inputs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Stability {
            scheme,
            omega,
            h,
            steps,
            y0,
            z0,
            out,
            svg,
        } => commands::cmd_stability(&StabilityArgs {
            schemes: scheme.schemes(),
            omega,
            h,
            steps,
            y0,
            z0,
            out: &out,
            svg,
        }),
        Command::Gradcheck {
            seed,
            theta,
            depth,
            width,
            paper_param_grad,
        } => commands::cmd_gradcheck(&GradcheckArgs {
            seed,
            theta,
            depth,
            width,
            paper_param_grad,
        }),
        Command::Train { config, out } => commands::cmd_train(&config, out.as_deref()),
        Command::Dataset { name, out, seed } => match name {
            DatasetName::Regression => commands::cmd_dataset_regression(&out, seed),
            DatasetName::Spirals => commands::cmd_dataset_spirals(&out),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("imres: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
