use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trichaos_cli::jobs::Overrides;
use trichaos_cli::{execute, Command};

#[derive(Parser)]
#[command(name = "trichaos", version, about = "Chaos diagnostics for an area-constrained three-particle array")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one orbit and report energy drift.
    Simulate(Common),
    /// Integrate two nearby orbits and report their separation.
    Perturb(Common),
    /// Estimate the expansion entropy over a restraining box.
    Entropy(Common),
    /// Scan equilibria of the constrained array over a range of areas.
    Equilibria(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed (entropy runs).
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Perturb(c) => (Command::Perturb, c),
        Cmd::Entropy(c) => (Command::Entropy, c),
        Cmd::Equilibria(c) => (Command::Equilibria, c),
    };
    let overrides = Overrides { seed: common.seed, output: common.out, threads: common.threads.map(|t| t as usize) };
    match execute(command, &common.config, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trichaos: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
