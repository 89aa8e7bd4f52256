//! `tentcalc`: exponent calculus, square-function evaluation and the
//! verification suites from the command line.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage or configuration error,
//! 3 a verification check failed.

mod exponents;
mod sf;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tentcalc::verify::{self, RunConfig, Suite, Verdict};

#[derive(Parser, Debug)]
#[command(
    name = "tentcalc",
    version,
    about = "Weighted square functions and tent spaces on periodic grids"
)]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "TENTCALC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact critical indices, Sobolev-type exponents and admissible ranges.
    Exponents(exponents::Args),
    /// Evaluate one square function on a grid function.
    Sf(sf::Args),
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(clap::Args, Debug)]
struct VerifyArgs {
    /// heat, poisson, bounded, angles, appendix, a comma list, or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Run configuration (JSON); unspecified fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON report; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat CSV of (suite, check, name, value, verdict).
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// A failure and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Domain(m) | Failure::Verification(m) => f.write_str(m),
        }
    }
}

impl From<tentcalc::Error> for Failure {
    fn from(e: tentcalc::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents)
        .map_err(|e| Failure::Domain(format!("cannot write {}: {e}", path.display())))
}

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn run_verify(args: VerifyArgs) -> CliResult<()> {
    let suites = Suite::parse_list(&args.suite).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut config = match &args.config {
        Some(path) => RunConfig::from_json(&read_file(path)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let report = verify::run(&config, &suites)?;
    for suite in &report.suites {
        for check in &suite.checks {
            let tag = match check.verdict {
                Verdict::Pass => "PASS  ",
                Verdict::Fail => "FAIL  ",
                Verdict::Report => "REPORT",
            };
            eprintln!("{tag} {}/{}", suite.suite, check.id);
        }
    }
    let json = report.to_json()?;
    match &args.out {
        Some(path) => write_file(path, json.as_bytes())?,
        None => print!("{json}"),
    }
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write_file(path, &buf)?;
    }
    let failed: usize = report
        .suites
        .iter()
        .map(|s| s.checks.iter().filter(|c| c.failed()).count())
        .sum();
    if failed > 0 {
        return Err(Failure::Verification(format!("{failed} check(s) failed")));
    }
    eprintln!(
        "all checks passed (config {}, seed {})",
        report.config_hash, report.seed
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        // fails only when a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Exponents(args) => exponents::run(args),
        Command::Sf(args) => sf::run(args),
        Command::Verify(args) => run_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
