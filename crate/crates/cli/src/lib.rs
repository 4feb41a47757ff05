//! Command-line front end for the `trichaos` library: configuration files,
//! the four commands, and their CSV and summary output.

pub mod config;
pub mod jobs;
pub mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use config::{ConfigError, ConfigFile};
use jobs::Overrides;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Perturb,
    Entropy,
    Equilibria,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] trichaos::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Something that can be written as CSV plus a short `key: value` summary.
trait Report {
    fn csv(&self, w: &mut dyn Write) -> io::Result<()>;
    fn summary(&self, w: &mut dyn Write) -> io::Result<()>;
}

macro_rules! report {
    ($t:ty) => {
        impl Report for $t {
            fn csv(&self, w: &mut dyn Write) -> io::Result<()> {
                self.write_csv(w)
            }
            fn summary(&self, w: &mut dyn Write) -> io::Result<()> {
                self.write_summary(w)
            }
        }
    };
}
report!(run::EntropyReport);
report!(run::OrbitReport);
report!(run::PerturbReport);
report!(run::EquilibriaReport);

/// Writes the CSV to `output` (or standard output) and the summary to
/// standard output (or standard error when the CSV occupies standard output).
fn emit(report: &dyn Report, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.csv(&mut w)?;
            w.flush()?;
            let stdout = io::stdout();
            let mut s = stdout.lock();
            writeln!(s, "output: {}", path.display())?;
            report.summary(&mut s)?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            report.csv(&mut w)?;
            w.flush()?;
            report.summary(&mut io::stderr().lock())?;
        }
    }
    Ok(())
}

/// Loads `config`, applies `overrides`, runs `command` and writes its output.
pub fn execute(command: Command, config: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let mut cfg = ConfigFile::load(config)?;
    match command {
        Command::Entropy => {
            let job = jobs::entropy_job(&mut cfg, overrides)?;
            let report = run::with_threads(job.settings.threads, || run::run_entropy(&job))??;
            emit(&report, job.settings.output.as_deref())
        }
        Command::Simulate => {
            let job = jobs::simulate_job(&mut cfg, overrides)?;
            let report = run::run_simulate(&job)?;
            emit(&report, job.settings.output.as_deref())
        }
        Command::Perturb => {
            let job = jobs::perturb_job(&mut cfg, overrides)?;
            let report = run::with_threads(job.orbit.settings.threads, || run::run_perturb(&job))??;
            emit(&report, job.orbit.settings.output.as_deref())
        }
        Command::Equilibria => {
            let job = jobs::equilibria_job(&mut cfg, overrides)?;
            let report = run::with_threads(job.settings.threads, || run::run_equilibria(&job))??;
            emit(&report, job.settings.output.as_deref())
        }
    }
}

/// Location of the configuration files shipped with the crate.
pub fn bundled_config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}
