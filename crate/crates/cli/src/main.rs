//! `robh2`: robust H2 analysis, synthesis and simulation from the command
//! line. Reports go to stdout as JSON; diagnostics go to stderr.
//!
//! Exit codes: 0 success, 1 no certificate / failed verification,
//! 2 invalid input.

mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::Failure;

#[derive(Parser)]
#[command(name = "robh2", version, about = "Robust and gain-scheduled H2 control for discrete-time LFT systems")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy, Debug)]
pub struct Flags {
    /// Solver tolerance.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub tol: f64,
    /// Random seed for simulations.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Solver iteration limit.
    #[arg(long, global = true, default_value_t = 200)]
    pub max_iter: usize,
    /// Add wall-clock timings to the report (makes it non-reproducible).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a robust H2 bound for a plant, open loop or with a controller.
    Analyze {
        plant: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
    },
    /// Synthesize a controller and re-verify it by closed-loop analysis.
    Synth {
        mode: Mode,
        plant: PathBuf,
        /// Where to write the controller JSON.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Simulate a closed loop.
    Simulate(SimulateArgs),
    /// Write a benchmark plant as JSON.
    Example {
        name: ExampleName,
        /// Output directory.
        #[arg(long)]
        emit: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    /// Robust state feedback.
    Sf,
    /// Gain-scheduled output feedback.
    Gs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExampleName {
    TwoDisk,
    Amb,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("scenario").required(true).multiple(false))]
pub struct SimulateArgs {
    pub plant: PathBuf,
    pub controller: PathBuf,
    /// Monte Carlo RMS output under unit white noise and random Delta.
    #[arg(long, group = "scenario")]
    pub white_noise: bool,
    /// Step disturbance of this magnitude under constant Delta.
    #[arg(long, group = "scenario", value_name = "MAG")]
    pub step: Option<f64>,
    /// Frozen-parameter induced gain (a lower bound).
    #[arg(long, group = "scenario")]
    pub induced: bool,
    /// Time steps per run (white noise: 4096, step: 1000).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 512)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 64)]
    pub runs: usize,
    /// Grid points per uncertainty axis for --induced.
    #[arg(long, default_value_t = 3)]
    pub grid: usize,
    /// Frequencies for --induced.
    #[arg(long, default_value_t = robh2::simulation::DEFAULT_FREQUENCIES)]
    pub freqs: usize,
    /// Constant Delta for --step: one value per scalar block, then per
    /// full block (as t I). Zero by default.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta: Vec<f64>,
    /// Closed-loop state range `a..b` whose decay --step also reports.
    #[arg(long)]
    pub states: Option<String>,
    /// Write the --step trajectory as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { plant, controller } => commands::analyze(&plant, controller.as_deref(), &cli.flags),
        Command::Synth { mode, plant, out } => commands::synth(mode, &plant, out.as_deref(), &cli.flags),
        Command::Simulate(args) => commands::simulate(&args, &cli.flags),
        Command::Example { name, emit } => commands::example(name, &emit, &cli.flags),
    };
    match result {
        Ok(report) => {
            // A closed pipe downstream is not an error of the command.
            let _ = writeln!(std::io::stdout(), "{}", report.render());
            ExitCode::SUCCESS
        }
        Err(Failure { code, message }) => {
            eprintln!("robh2: {message}");
            ExitCode::from(code)
        }
    }
}
