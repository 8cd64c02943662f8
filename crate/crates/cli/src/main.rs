//! `rwre` command-line experiment runner.
//!
//! Exit codes: 0 success, 1 criterion failure, 2 usage/config/io error,
//! 3 resource error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rwre::harness::{self, ExperimentConfig, RunOptions};
use rwre::Error;

#[derive(Parser)]
#[command(name = "rwre", version, about = "Random walks in random environment: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; does not change any output byte.
        #[arg(long)]
        workers: Option<usize>,
        /// Master seed override (decimal or 0x-prefixed hex).
        #[arg(long, value_parser = parse_seed)]
        seed: Option<u64>,
        /// Output root; the run directory is created beneath it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Recompute even if a complete run with this config exists.
        #[arg(long)]
        force: bool,
    },
    /// Run an acceptance suite and print one PASS/FAIL block per criterion.
    Verify {
        /// oracles, diffusion, lil-envelope, determinism or all.
        suite: String,
        /// Scratch directory for the determinism runs.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the suite.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Pretty-print the manifest of a run directory.
    Inspect { run: PathBuf },
    /// Print the flat table of a run directory after checking its digest.
    Export { run: PathBuf },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Resource { .. } => 3,
        _ => 2,
    }
}

fn execute(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run {
            config,
            workers,
            seed,
            out,
            force,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            cfg.validate()?;
            let outcome = harness::run(&cfg, RunOptions { force })?;
            println!(
                "{} {}",
                if outcome.reused { "reused" } else { "wrote" },
                outcome.dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            suite,
            out,
            workers,
        } => {
            harness::suite_criteria(&suite)?;
            let scratch = match out {
                Some(o) => o,
                None => std::env::temp_dir().join(format!("rwre-verify-{}", std::process::id())),
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.unwrap_or(0))
                .build()
                .map_err(|e| Error::Usage(e.to_string()))?;
            let outcomes = pool.install(|| harness::verify(&suite, &scratch, |o| print!("{o}")))?;
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Inspect { run } => {
            print!("{}", harness::inspect(&run)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { run } => {
            print!("{}", harness::export(&run)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
