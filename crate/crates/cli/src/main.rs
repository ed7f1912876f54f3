//! `eda-lab`: runs, sweeps, scaling fits, comparisons, noise studies, drift
//! checks and plots.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 some run
//! exhausted its budget, 3 a drift check failed.

mod commands;
mod config;
mod output;
mod plot;
mod rules;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "eda-lab", version, about = "Experiments with univariate EDAs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
pub struct Threads {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, env = "EDA_LAB_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Args)]
pub struct BatchArgs {
    /// Protocol file (INI).
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub threads: Threads,
}

#[derive(Args)]
pub struct RunArgs {
    /// umda, pbil, mmas_ib, cga or sig_cga.
    #[arg(long)]
    pub algo: String,
    #[arg(long)]
    pub n: usize,
    /// name[;target=..][;perm=..][;noise=..]
    #[arg(long, default_value = "onemax")]
    pub fitness: String,
    #[arg(long)]
    pub lambda: Option<usize>,
    #[arg(long)]
    pub mu: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// 1/n, borderless or a number in (0, 1/2].
    #[arg(long, default_value = "1/n")]
    pub margin: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluation budget (default: ceil(5000 n ln(n+1) lambda)).
    #[arg(long)]
    pub max_evals: Option<u64>,
    /// Also write the result as a one-row CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write t and the frequency sum P_t every --probe-every generations.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1, requires = "trace_out")]
    pub probe_every: u64,
}

#[derive(Args)]
pub struct DriftArgs {
    /// Synthetic chain check: walk, thinning, sqrt or all.
    #[arg(long, conflicts_with_all = ["trace", "h"])]
    pub chain: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.99)]
    pub confidence: f64,
    /// CSV with columns t, the process value and optionally run.
    #[arg(long, conflicts_with = "h")]
    pub trace: Option<PathBuf>,
    /// Column of the process value in --trace.
    #[arg(long, default_value = "potential", requires = "trace")]
    pub column: String,
    /// Number of equal-width bins over the observed range.
    #[arg(long, default_value_t = 10, requires = "trace")]
    pub bins: usize,
    /// Minimum transitions for a bin to report a mean.
    #[arg(long, default_value_t = 30, requires = "trace")]
    pub min_count: usize,
    /// Drift shape for the variable-drift bound: constant, linear, sqrt or power:<a>.
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long, default_value_t = 1.0, requires = "h")]
    pub c: f64,
    #[arg(long, requires = "h")]
    pub x0: Option<f64>,
    #[arg(long, default_value_t = 1e-9, requires = "h")]
    pub tol: f64,
    #[command(flatten)]
    pub threads: Threads,
}

#[derive(Args)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One run; prints hit status, evaluations, generations and border hits.
    Run(RunArgs),
    /// Grid sweep from a [sweep] protocol.
    Sweep(BatchArgs),
    /// Runtime scaling in n from a [scaling] protocol.
    Scaling(BatchArgs),
    /// Several algorithms on several functions from a [compare] protocol.
    Compare(BatchArgs),
    /// EDA and (1+1) EA under noise from a [noise] protocol.
    Noise(BatchArgs),
    /// Drift-theorem checks on synthetic chains, trace files or drift shapes.
    DriftCheck(DriftArgs),
    /// Line plot of two CSV columns as SVG.
    Plot(PlotArgs),
}

/// How a successful command ended.
pub enum Status {
    Done,
    BudgetExhausted,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Scaling(a) => commands::scaling(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Noise(a) => commands::noise(&a),
        Command::DriftCheck(a) => commands::drift_check(&a),
        Command::Plot(a) => commands::plot(&a),
    };
    match result {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::BudgetExhausted) => ExitCode::from(2),
        Ok(Status::CheckFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
