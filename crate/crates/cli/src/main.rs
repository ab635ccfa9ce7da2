mod analytic;
mod config;
mod oracle;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use output::Artifacts;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Check(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

pub fn solver(e: gapstress::error::Error) -> CliError {
    CliError::Solver(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "gapstress", version, about = "Stress concentration between two nearly touching rigid particles in Stokes flow")]
struct Cli {
    /// INI-style run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides run.out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for oracle solves; 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for sampled points (overrides run.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Singular-field sampling.
    Fields {
        #[command(subcommand)]
        action: FieldsAction,
    },
    /// Runs the invariant checks and writes a JSON report.
    Verify,
    /// Gap-integral comparisons.
    Integrals {
        #[command(subcommand)]
        action: IntegralsAction,
    },
    /// Oracle solves.
    Solve {
        #[command(subcommand)]
        action: SolveAction,
    },
    /// Stiffness system, blow-up factors and potential differences from one box solve.
    Factors,
    /// Oracle sweeps.
    Sweep {
        #[command(subcommand)]
        action: SweepAction,
    },
    /// Asymptotic stress at a point from supplied ratios.
    Predict,
}

#[derive(Subcommand, Debug)]
enum FieldsAction {
    /// Samples velocity, pressure, stress and momentum residuals.
    Eval,
}

#[derive(Subcommand, Debug)]
enum IntegralsAction {
    /// Closed form, quadrature and asymptotic form over the eps sweep.
    Compare,
}

#[derive(Subcommand, Debug)]
enum SolveAction {
    /// Two disks in a box: every decomposed problem.
    Box,
    /// Local gap solves against the singular fields.
    Gap,
}

#[derive(Subcommand, Debug)]
enum SweepAction {
    /// Box solves across the eps sweep with exponent fits and limits.
    Eps,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = RunConfig::parse(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load(&cli)?;
    let name = match &cli.command {
        Command::Fields { .. } => "fields eval",
        Command::Verify => "verify",
        Command::Integrals { .. } => "integrals compare",
        Command::Solve { action: SolveAction::Box } => "solve box",
        Command::Solve { action: SolveAction::Gap } => "solve gap",
        Command::Factors => "factors",
        Command::Sweep { .. } => "sweep eps",
        Command::Predict => "predict",
    };
    let art = Artifacts::new(&cfg.out, cfg.hash(), name)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Fields { action: FieldsAction::Eval } => analytic::fields_eval(&cfg, &art),
        Command::Verify => verify::run(&cfg, &art),
        Command::Integrals { action: IntegralsAction::Compare } => analytic::integrals_compare(&cfg, &art),
        Command::Solve { action: SolveAction::Box } => oracle::solve_box(&cfg, &art),
        Command::Solve { action: SolveAction::Gap } => oracle::solve_gap(&cfg, &art),
        Command::Factors => oracle::factors(&cfg, &art),
        Command::Sweep { action: SweepAction::Eps } => oracle::sweep(&cfg, &art),
        Command::Predict => analytic::predict(&cfg, &art),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gapstress: {e}");
            ExitCode::from(e.code())
        }
    }
}
