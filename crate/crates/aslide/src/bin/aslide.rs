//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aslide::harness::{self, RunFlags};

#[derive(Parser)]
#[command(name = "aslide", version, about = "Adversarial-schedule routing simulator and verification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and write its trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rounds: Option<u64>,
        /// Schedule file to replay (for `adversary = replay`).
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Write the trace here (line-delimited records).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Dump the realized schedule for later replay.
        #[arg(long)]
        emit_schedule: Option<PathBuf>,
    },
    /// Slide versus the cyclic adversary plus the delivery oracle, with
    /// every per-cycle inequality checked.
    Lowerbound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        cycles: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        emit_schedule: Option<PathBuf>,
    },
    /// Dual-run the configured protocol against the offline plan on seeded
    /// or replayed schedules and check the competitive bound.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// May repeat: one random schedule per seed.
        #[arg(long)]
        seed: Vec<u64>,
        /// May repeat: schedule files to replay.
        #[arg(long)]
        replay: Vec<PathBuf>,
        #[arg(long)]
        rounds: Option<u64>,
    },
    /// Maximum deliverable packets at every checkpoint of a schedule file.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        replay: PathBuf,
        #[arg(long)]
        rounds: Option<u64>,
    },
    /// Run a named property suite: family-lemmas, slide-invariants,
    /// slide-plus-invariants, oracle-equivalence, or potentials.
    Verify {
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rounds: Option<u64>,
        /// Scan an existing trace file instead of running fresh.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, rounds, replay, trace, emit_schedule } => {
            let flags = RunFlags { seed, rounds, replay, trace, emit_schedule };
            harness::cmd_run(&config, &flags)
        }
        Command::Lowerbound { config, cycles, trace, emit_schedule } => {
            let flags = RunFlags { trace, emit_schedule, ..Default::default() };
            harness::cmd_lowerbound(&config, cycles, &flags)
        }
        Command::Compare { config, seed, replay, rounds } => {
            let flags = RunFlags { rounds, ..Default::default() };
            harness::cmd_compare(&config, &seed, &replay, &flags)
        }
        Command::Oracle { config, replay, rounds } => {
            let flags = RunFlags { replay: Some(replay), rounds, ..Default::default() };
            harness::cmd_oracle(&config, &flags)
        }
        Command::Verify { suite, seed, rounds, trace } => {
            let flags = RunFlags { seed, rounds, trace, ..Default::default() };
            harness::cmd_verify(&suite, &flags)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aslide: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
