use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blocksketch::experiments::{
    gen_data, oracle_suite, repeat_seed, run_fig1, run_fig2, run_fig3, secrecy_suite, ExperimentConfig, SuiteReport,
};
use blocksketch::Error;
use clap::{Parser, Subcommand};

/// Experiment driver for block-subsampled orthonormal sketching.
#[derive(Parser, Debug)]
#[command(name = "blocksketch", version)]
struct Cli {
    /// `key = value` experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Write A, b, w and x* as CSV.
    GenData,
    /// Final residual for every step factor and method.
    Fig1,
    /// Residual per iteration at the fig2 step factor.
    Fig2,
    /// Block leverage scores before and after each projection.
    Fig3,
    /// Exact expectation and solution checks.
    OracleSuite,
    /// Distinguisher and group secrecy checks.
    SecrecySuite,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

enum Outcome {
    Done,
    ChecksFailed,
    Diverged(Vec<String>),
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::parse(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn suite(dir: &Path, name: &str, report: SuiteReport) -> Result<Outcome, Error> {
    write(dir, name, &report.csv())?;
    for row in report.rows.iter().filter(|r| !r.pass) {
        eprintln!(
            "check failed: {} [{}] value {} threshold {}",
            row.test, row.param, row.value, row.threshold
        );
    }
    Ok(if report.passed() {
        Outcome::Done
    } else {
        Outcome::ChecksFailed
    })
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let cfg = load_config(cli)?;
    let dir = cfg.output.clone();
    match cli.command {
        Command::GenData => {
            gen_data(&cfg, repeat_seed(&cfg, 0))?.write_to(&dir)?;
            write(&dir, "config.txt", &cfg.emit())?;
        }
        Command::Fig1 => write(&dir, "fig1.csv", &run_fig1(&cfg)?.csv())?,
        Command::Fig2 => {
            let fig = run_fig2(&cfg)?;
            write(&dir, "fig2.csv", &fig.csv())?;
            if !fig.diverged.is_empty() {
                return Ok(Outcome::Diverged(fig.diverged));
            }
        }
        Command::Fig3 => write(&dir, "fig3.csv", &run_fig3(&cfg)?.csv())?,
        Command::OracleSuite => return suite(&dir, "oracle_suite.csv", oracle_suite(cfg.seed)?),
        Command::SecrecySuite => return suite(&dir, "secrecy_suite.csv", secrecy_suite(cfg.seed)?),
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(EXIT_VALIDATION),
        Ok(Outcome::Diverged(methods)) => {
            eprintln!("diverged: {}", methods.join(", "));
            ExitCode::from(EXIT_DIVERGENCE)
        }
        Err(e @ (Error::Config(_) | Error::Dimension(_) | Error::Precondition(_) | Error::Unsupported(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
