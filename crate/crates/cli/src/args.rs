use std::path::PathBuf;

use clap::{Parser, Subcommand};
use kspm::Parameters;

use crate::analyze::{self, AnalyzeArgs};
use crate::bench::{self, BenchMode};
use crate::error::{Result, EXIT_CHECK_FAILED, EXIT_OK};
use crate::format::FixedPointMode;
use crate::simulate::{self, SimulateArgs};
use crate::suites::{self, Suite, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "kspm", version, about = "Kadanoff sand pile model toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the iterative process and export traces.
    Simulate {
        #[arg(long)]
        grains: u64,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long)]
        out: PathBuf,
        /// Write a snapshot every this many grains (0 = never).
        #[arg(long, default_value_t = 0)]
        snapshot_every: u64,
        #[arg(long)]
        resume_from: Option<PathBuf>,
        /// Store the full fixed point in every record instead of changes.
        #[arg(long)]
        dense: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 10_000)]
        grains: u64,
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Random stabilizations per configuration.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        configs: usize,
        #[arg(long, default_value_t = 6)]
        j_max: usize,
        #[arg(long, default_value_t = 2_000_000)]
        cap: u64,
    },
    /// Time naive replay against pseudo-local prediction.
    Bench {
        #[arg(long)]
        grains: u64,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, value_enum, default_value_t = BenchMode::Both)]
        mode: BenchMode,
    },
    /// Growth report for D = 3.
    Analyze {
        #[arg(long, default_value_t = 100_000)]
        grains: u64,
        #[arg(long, default_value_t = 6)]
        j_max: usize,
        #[arg(long, default_value_t = 2_000_000)]
        cap: u64,
        #[arg(long, default_value_t = 1_000)]
        fit_upto: u64,
    },
}

/// Runs a parsed command, printing to stdout. Returns the exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate {
            grains,
            d,
            out,
            snapshot_every,
            resume_from,
            dense,
            seed,
        } => {
            let args = SimulateArgs {
                grains,
                d,
                out,
                snapshot_every,
                resume_from,
                mode: if dense {
                    FixedPointMode::Dense
                } else {
                    FixedPointMode::Sparse
                },
                seed,
            };
            let s = simulate::simulate(&args)?;
            println!(
                "simulated k = {}..{} into {} ({} snapshots)",
                s.start_k,
                s.end_k,
                args.out.display(),
                s.snapshots.len()
            );
            Ok(EXIT_OK)
        }
        Command::Verify {
            suite,
            grains,
            d,
            seeds,
            seed,
            configs,
            j_max,
            cap,
        } => {
            let opts = VerifyOptions {
                grains,
                d,
                seeds,
                seed,
                configs,
                j_max,
                cap,
                ..VerifyOptions::default()
            };
            let reports = suites::run_suite(suite, &opts)?;
            let mut ok = true;
            for r in &reports {
                print!("{}", r.render());
                ok &= r.ok();
            }
            println!("{}", if ok { "PASS" } else { "FAIL" });
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Bench { grains, d, mode } => {
            let outcome = bench::bench(grains, Parameters::new(d)?, mode)?;
            print!("{}", outcome.render());
            Ok(if outcome.ok() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
        Command::Analyze {
            grains,
            j_max,
            cap,
            fit_upto,
        } => {
            let report = analyze::analyze(&AnalyzeArgs {
                grains,
                j_max,
                cap,
                fit_upto,
            })?;
            print!("{}", analyze::render(&report, fit_upto));
            Ok(if report.violations.is_empty() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
    }
}
