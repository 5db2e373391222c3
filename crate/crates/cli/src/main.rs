//! `alpha` — benchmark and verification harness for the randomized block
//! coordinate descent solvers.
//!
//! Three subcommands:
//!
//! * `solve`   — run one configuration (or a seed sweep) and write trace CSVs;
//! * `check`   — compare observed progress against the theoretical bound of
//!   a preset and report PASS/FAIL;
//! * `certify` — test user-supplied stepsize weights against the
//!   overapproximation inequality.
//!
//! Exit codes: 0 success (and bound/certificate holds), 1 check/certificate
//! failure, 2 configuration errors, 3 data-format errors.

mod commands;
mod experiment;

use clap::{ArgAction, Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "alpha", version, about = "Randomized block coordinate descent runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and write per-iteration traces.
    Solve(RunArgs),
    /// Verify observed progress against the preset's theoretical bound.
    Check(CheckArgs),
    /// Certify stepsize weights for a sampling.
    Certify(RunArgs),
}

/// Flags shared by every subcommand. Any of them may also appear in a
/// `key=value` config file (keys mirror the long flag names exactly);
/// explicit flags win over file entries.
#[derive(Args, Clone, Default)]
pub struct RunArgs {
    /// Flat key=value config file mirroring these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Matrix file: coordinate list `m N nnz` + 1-indexed `row col value`
    /// lines, or a row-oriented `label idx:val ...` file when no separate
    /// targets file is given.
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Targets/labels, one real per line.
    #[arg(long)]
    pub targets: Option<PathBuf>,

    /// Loss: `quadratic` or `logistic`.
    #[arg(long)]
    pub loss: Option<String>,

    /// Regularizer: `none`, `l1`, `sql2` or `box`.
    #[arg(long)]
    pub reg: Option<String>,

    /// Regularization strength.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Box bounds `lo,hi` (used with --reg box).
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub r#box: Option<String>,

    /// Sampling: `full`, `serial-uniform`, `serial:<q1,..>`,
    /// `tau-nice:<t>`, `distributed:<c>,<t>`.
    #[arg(long)]
    pub sampling: Option<String>,

    /// Stepsize schedule: `constant` or `accelerated`.
    #[arg(long)]
    pub schedule: Option<String>,

    /// Initial theta (overrides the preset/schedule default).
    #[arg(long)]
    pub theta0: Option<f64>,

    /// Named method: gd, agd, pcd, apcd, prox_gd, acc_prox_gd, pcdm,
    /// approxis.
    #[arg(long)]
    pub preset: Option<String>,

    /// Source of the stepsize weights: `serial`, `full` or `user`.
    #[arg(long)]
    pub eso: Option<String>,

    /// Comma-separated weights (with --eso user).
    #[arg(long)]
    pub v: Option<String>,

    /// Certification of the weights before running: `psd`, `mc` or `off`.
    #[arg(long)]
    pub certify: Option<String>,

    /// Monte Carlo trials for `--certify mc`.
    #[arg(long)]
    pub trials: Option<usize>,

    /// Iteration budget.
    #[arg(long)]
    pub iters: Option<usize>,

    /// Seed of the subset sequence.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Inclusive seed range `a..b`; one run and one trace file per seed.
    #[arg(long)]
    pub seeds: Option<String>,

    /// Worker threads for seed sweeps.
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Trace output path; sweeps write `<stem>.seed<k>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Append bound_nonacc,bound_acc columns (needs a minimizer).
    #[arg(long, action = ArgAction::SetTrue)]
    pub bound: bool,

    /// File with the minimizer, one coordinate per line.
    #[arg(long)]
    pub xstar: Option<PathBuf>,

    /// Compute the minimizer (direct solve for unregularized quadratics,
    /// long accelerated reference run otherwise).
    #[arg(long, action = ArgAction::SetTrue)]
    pub compute_xstar: bool,

    /// Extra diagnostics; `gamma` records the iterate history and checks
    /// the convex-combination coefficients.
    #[arg(long)]
    pub diagnostics: Option<String>,

    /// Log every k-th iteration.
    #[arg(long)]
    pub log_stride: Option<usize>,

    /// Skip objective evaluation in the trace (cost benchmarking).
    #[arg(long = "no-eval", action = ArgAction::SetTrue)]
    pub no_eval: bool,

    /// Scale every matrix column to unit norm at load time.
    #[arg(long, action = ArgAction::SetTrue)]
    pub normalize: bool,

    /// Realization to run: `generic`, `smooth` or `efficient`.
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Args, Clone)]
pub struct CheckArgs {
    #[command(flatten)]
    pub run: RunArgs,

    /// Accepted overshoot of observed/bound; defaults to 1e-9 for
    /// deterministic presets and 0.05 for randomized ones.
    #[arg(long)]
    pub slack: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => commands::solve(args),
        Command::Check(args) => commands::check(args),
        Command::Certify(args) => commands::certify(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("alpha: {err}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Data-format problems exit 3, everything else is a config error (2).
fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<alpha_core::Error>() {
        Some(alpha_core::Error::DataFormat { .. }) | Some(alpha_core::Error::Io { .. }) => 3,
        _ => 2,
    }
}
