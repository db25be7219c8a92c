//! The `mocha` binary: deterministic stereo matching from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mocha_cli::{run_eval, run_match, run_selftest, EvalArgs, MatchArgs, SelftestArgs};

#[derive(Parser)]
#[command(
    name = "mocha",
    version,
    about = "Deterministic stereo matching with motif correlation graph attention",
    after_help = "Exit codes: 0 success, 1 self-test failure, 2 usage or \
                  dimension errors, 3 file system or format errors."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Match a rectified stereo pair and write the disparity map as PFM.
    Match(MatchCli),
    /// Compare a disparity PFM against ground truth and print JSON metrics.
    Eval(EvalCli),
    /// Run the built-in verification suites against brute-force oracles.
    Selftest(SelftestCli),
}

#[derive(Args)]
struct MatchCli {
    /// Left image (binary PGM or PPM).
    #[arg(long)]
    left: PathBuf,
    /// Right image (binary PGM or PPM), same dimensions as the left.
    #[arg(long)]
    right: PathBuf,
    /// Output disparity map (PFM).
    #[arg(long)]
    out: PathBuf,
    /// JSON pipeline configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for all synthesized weights. Precedence: this flag, then the
    /// config file, then the MOCHA_SEED environment variable, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of refinement iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Stage toggle, repeatable: mcg=on|off, wavelet=on|off, remp=on|off.
    #[arg(long = "toggle", value_name = "NAME=STATE")]
    toggles: Vec<String>,
    /// Worker thread count. Does not change the outputs, only the speed.
    #[arg(long)]
    threads: Option<usize>,
    /// Write every motif graph as JSON lines (plus a few GraphViz DOT
    /// samples) into this directory.
    #[arg(long, value_name = "DIR")]
    dump_motif_graphs: Option<PathBuf>,
    /// Write the initialization and each refinement iterate as PFM files
    /// into this directory.
    #[arg(long, value_name = "DIR")]
    dump_iterations: Option<PathBuf>,
    /// Write a color visualization of the disparity map (binary PPM).
    #[arg(long, value_name = "FILE")]
    viz: Option<PathBuf>,
}

#[derive(Args)]
struct EvalCli {
    /// Estimated disparity map (PFM).
    #[arg(long)]
    disp: PathBuf,
    /// Ground-truth disparity map (PFM), same dimensions.
    #[arg(long)]
    gt: PathBuf,
    /// Bad-pixel thresholds in disparity units, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    thresholds: Vec<f64>,
    /// Treat nonpositive ground-truth values as missing.
    #[arg(long)]
    mask_nonpositive: bool,
}

#[derive(Args)]
struct SelftestCli {
    /// Randomized trials per suite.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Force the named suite to fail (negative control for the failure
    /// reporting path).
    #[arg(long, hide = true, value_name = "SUITE")]
    inject_fault: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let code = match cli.command {
        Command::Match(m) => run_match(
            &MatchArgs {
                left: m.left,
                right: m.right,
                out: m.out,
                config: m.config,
                seed: m.seed,
                iters: m.iters,
                toggles: m.toggles,
                threads: m.threads,
                dump_motif_graphs: m.dump_motif_graphs,
                dump_iterations: m.dump_iterations,
                viz: m.viz,
            },
            &mut out,
            &mut err,
        ),
        Command::Eval(e) => run_eval(
            &EvalArgs {
                disp: e.disp,
                gt: e.gt,
                thresholds: e.thresholds,
                mask_nonpositive: e.mask_nonpositive,
            },
            &mut out,
            &mut err,
        ),
        Command::Selftest(s) => run_selftest(
            &SelftestArgs {
                trials: s.trials,
                inject_fault: s.inject_fault,
            },
            &mut out,
            &mut err,
        ),
    };
    ExitCode::from(code as u8)
}
