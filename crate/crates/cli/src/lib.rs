//! Command-line front end for the qvqe workbench.

pub mod args;
pub mod artifacts;
pub mod commands;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command, Opts};
pub use commands::{execute, Report};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(qvqe_core::Error),
    Io(std::io::Error),
}

impl From<qvqe_core::Error> for CliError {
    fn from(e: qvqe_core::Error) -> Self {
        use qvqe_core::Error as E;
        match e {
            E::InvalidConfig(_) | E::FreezeTooMany { .. } => CliError::Usage(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
        }
    }

    /// One-line JSON diagnostic.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.message() }).to_string()
    }
}

/// Executes a parsed command inside a worker pool and writes its artifacts.
pub fn run_cli(cli: &Cli) -> Result<Report, CliError> {
    let opts = cli.command.opts();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| execute(&cli.command))?;
    for a in &report.artifacts {
        a.write(&opts.out)?;
    }
    Ok(report)
}

/// Full entry point; returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_cli(&cli) {
        Ok(report) => {
            let mut out = std::io::stdout().lock();
            for line in &report.lines {
                let _ = writeln!(out, "{line}");
            }
            for a in &report.artifacts {
                let _ = writeln!(out, "wrote {}", cli.command.opts().out.join(format!("{}.csv", a.run_id)).display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    }
}
