use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qvqe_core::{InitStrategy, Method, RunConfig, Thresholds};

#[derive(Debug, Parser)]
#[command(name = "qvqe", version, about = "Adaptive VQE experiment runner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Screen the operator-block pool of one fixture.
    Screen(Opts),
    /// Run one method on one fixture.
    Run(Opts),
    /// Run each method on each fixture.
    Sweep(Opts),
    /// Random-restart energy distributions at every depth of a warm run.
    Landscape(Opts),
    /// Progressive runs with random re-initialisation every macro-cycle.
    Burrow(Opts),
    /// Per-cycle overlaps with the lowest exact roots, one trace per method.
    Overlap(Opts),
    /// Lowest exact roots of the fixture's sector.
    Fci(Opts),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Screen(_) => "screen",
            Command::Run(_) => "run",
            Command::Sweep(_) => "sweep",
            Command::Landscape(_) => "landscape",
            Command::Burrow(_) => "burrow",
            Command::Overlap(_) => "overlap",
            Command::Fci(_) => "fci",
        }
    }

    pub fn opts(&self) -> &Opts {
        match self {
            Command::Screen(o)
            | Command::Run(o)
            | Command::Sweep(o)
            | Command::Landscape(o)
            | Command::Burrow(o)
            | Command::Overlap(o)
            | Command::Fci(o) => o,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    #[value(name = "compass_pro", alias = "compass-pro")]
    CompassPro,
    #[value(name = "compass_static", alias = "compass-static")]
    CompassStatic,
    #[value(name = "compass_stepwise", alias = "compass-stepwise")]
    CompassStepwise,
    #[value(name = "uccsd")]
    Uccsd,
    #[value(name = "uccsdt")]
    Uccsdt,
    #[value(name = "adapt_sd", alias = "adapt-sd")]
    AdaptSd,
    #[value(name = "adapt_gsd", alias = "adapt-gsd")]
    AdaptGsd,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::CompassPro => Method::CompassPro,
            MethodArg::CompassStatic => Method::CompassStatic,
            MethodArg::CompassStepwise => Method::CompassStepwise,
            MethodArg::Uccsd => Method::Uccsd,
            MethodArg::Uccsdt => Method::Uccsdt,
            MethodArg::AdaptSd => Method::AdaptSd,
            MethodArg::AdaptGsd => Method::AdaptGsd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Warm,
    Hf,
    Random,
}

impl From<InitArg> for InitStrategy {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Warm => InitStrategy::Warm,
            InitArg::Hf => InitStrategy::HfZero,
            InitArg::Random => InitStrategy::Random,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    /// Fixture label (e.g. H4_d1.50) or path to an FCIDUMP; repeatable, comma lists accepted.
    #[arg(long, value_delimiter = ',')]
    pub fixture: Vec<String>,
    /// Directory holding `<molecule>/<label>.fcidump`.
    #[arg(long, default_value = qvqe_core::hamiltonian::BUNDLED_FIXTURES)]
    pub fixtures_dir: PathBuf,
    /// Frozen core orbitals; defaults to the fixture sidecar's choice.
    #[arg(long)]
    pub freeze: Option<usize>,
    /// Ansatz method; repeatable for sweep and overlap.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub method: Vec<MethodArg>,
    #[arg(long, default_value_t = 1e-5)]
    pub threshold_d: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub threshold_s: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub macro_tol: f64,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    /// Comma-separated integer seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Exact roots used for overlaps.
    #[arg(long, default_value_t = 8)]
    pub roots: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Upper bound on appended blocks.
    #[arg(long, default_value_t = 200)]
    pub max_blocks: usize,
}

impl Opts {
    pub fn methods(&self, default: &[Method]) -> Vec<Method> {
        if self.method.is_empty() {
            default.to_vec()
        } else {
            self.method.iter().map(|&m| m.into()).collect()
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            threshold_d: self.threshold_d,
            threshold_s: self.threshold_s,
            macro_tol: self.macro_tol,
        }
    }

    pub fn run_config(&self, method: Method, init: InitStrategy, seed: u64) -> RunConfig {
        RunConfig {
            method,
            thresholds: self.thresholds(),
            init_strategy: self.init.map(Into::into).unwrap_or(init),
            seed,
            max_blocks: self.max_blocks,
            ..RunConfig::default()
        }
    }

    /// Explicit seeds, or `0..n` when none were given.
    pub fn seeds_or(&self, n: u64) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..n).collect()
        } else {
            self.seeds.clone()
        }
    }
}
