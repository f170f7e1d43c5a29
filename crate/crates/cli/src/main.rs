//! `relk`: relative K₀ classes, relation suites and cycle class maps from
//! the command line. Reports are JSON; the exit code is 0 when every check
//! passes, 1 when one fails, 2 on invalid input and 3 when a resource
//! guard trips.

mod commands;
mod fail;
mod instance;
mod report;

use clap::{Args, Parser, Subcommand};
use commands::RandomArgs;
use fail::Failure;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "relk", version, about = "Relative K0 of ring surjections and cycle classes with modulus")]
struct Cli {
    /// Write the JSON report to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on enumerated (g, h) pairs; overrides RELK_MAX_CANDIDATES.
    #[arg(long, global = true)]
    max_candidates: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Line {
    /// Prime field size.
    #[arg(long)]
    field: u64,
    /// Monic modulus polynomial in t, e.g. `t^2`.
    #[arg(long)]
    modulus: String,
    /// Degree bound on g and h.
    #[arg(long)]
    bound: usize,
}

#[derive(Args)]
struct Sampled {
    /// Instance file; random instances are drawn when it has none.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, requires = "modulus")]
    field: Option<u64>,
    #[arg(long, requires = "field")]
    modulus: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    count: usize,
}

impl Sampled {
    fn random(&self) -> RandomArgs<'_> {
        RandomArgs { field: self.field, modulus: self.modulus.as_deref(), seed: self.seed, count: self.count }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Class of each triple in an instance file.
    Class {
        #[arg(long)]
        instance: PathBuf,
        /// Only these triples (default: all).
        #[arg(long)]
        triple: Vec<String>,
    },
    /// Check exactness of the Heller sequence for surjections like `Z->Z/5`.
    Heller {
        #[arg(long, required = true)]
        surjection: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run relation suites on seeded random instances, or replay failures.
    Verify {
        /// A relation kind such as `chi_composite`, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Surjections to test (default: a fixed list of five).
        #[arg(long)]
        surjection: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// A report (or a single relation payload) whose failures to rerun.
        #[arg(long, conflicts_with_all = ["surjection"])]
        replay: Option<PathBuf>,
    },
    /// Brute-force Chow group with modulus from graph relations.
    Chow(Line),
    /// Check the cycle class map on the Chow presentation.
    Cycmap(Line),
    /// Norm compatibility of transfers along finite free algebras.
    Transfer(Sampled),
    /// Trivializing loci of triples over F_p[t] -> F_p[t]/(f).
    Locus(Sampled),
}

fn run(cli: &Cli) -> Result<report::Report, Failure> {
    let cap = || commands::max_candidates(cli.max_candidates);
    match &cli.command {
        Command::Class { instance, triple } => commands::class(instance, triple),
        Command::Heller { surjection, seed } => commands::heller(surjection, *seed),
        Command::Verify { replay: Some(path), .. } => commands::replay(path),
        Command::Verify { suite, surjection, seed, count, replay: None } => {
            commands::verify(suite, surjection, *seed, *count)
        }
        Command::Chow(l) => commands::chow(l.field, &l.modulus, l.bound, cap()?),
        Command::Cycmap(l) => commands::cycmap(l.field, &l.modulus, l.bound, cap()?),
        Command::Transfer(s) => commands::transfer(s.instance.as_deref(), &s.random()),
        Command::Locus(s) => commands::locus(s.instance.as_deref(), &s.random()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            if let Err(e) = report::write(&r, cli.out.as_deref()) {
                eprintln!("relk: cannot write report: {e}");
                return ExitCode::from(2);
            }
            eprintln!("relk {}: {}/{} checks passed", r.body.command, r.body.passed, r.body.total);
            ExitCode::from(if r.body.pass { 0 } else { 1 })
        }
        Err(f) => {
            eprintln!("relk: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
