use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csit_cli::{configure_threads, registry, run_experiment, validate_bounds, CliError, ExperimentSpec, ValidateOptions};
use csit_core::lab::RzfCache;
use csit_core::SystemConfig;

#[derive(Parser)]
#[command(name = "csit", version = csit_cli::VERSION, about = "Training and feedback optimization for ZF downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML spec, or a registered figure.
    Run {
        /// Experiment spec file.
        #[arg(conflicts_with = "fig", required_unless_present = "fig")]
        spec: Option<PathBuf>,
        /// Registered figure name (see `list`).
        #[arg(long)]
        fig: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the experiment file's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the closed-form bounds against Monte Carlo; prints a JSON report.
    Validate {
        /// Reduced grid and block counts.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// List registered figures.
    List,
}

const EXIT_SPEC: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

fn run(spec: Option<PathBuf>, fig: Option<String>, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let mut spec = match (spec, fig) {
        (Some(path), _) => ExperimentSpec::from_file(&path)?,
        (None, Some(name)) => ExperimentSpec::for_figure(&name)?,
        (None, None) => return Err(CliError::Spec("give a spec file or --fig".into())),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let out_dir = out.unwrap_or_else(|| spec.output.clone());
    std::fs::create_dir_all(&out_dir)?;
    let cache = RzfCache::with_file(out_dir.join("rzf_cache.json"))?;
    let report = run_experiment(&spec, &out_dir, &cache)?;
    cache.save()?;
    for p in &report.csv {
        println!("{}", p.display());
    }
    if let Some(p) = &report.mc_summaries {
        println!("{}", p.display());
    }
    println!("{}", report.sidecar.display());
    eprintln!("{} finished in {:.2} s", spec.name, report.wall_clock_s);
    Ok(())
}

fn validate(quick: bool, seed: u64) -> Result<bool, CliError> {
    let opts = ValidateOptions { quick, seed, ..Default::default() };
    let report = validate_bounds(&SystemConfig::default(), &opts)?;
    for c in &report.checks {
        eprintln!("{} {:<44} margin {:+.5}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.margin, c.detail);
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    eprintln!("{} checks, {failed} failed", report.checks.len());
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{json}");
    Ok(report.pass)
}

fn exit_for(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        CliError::Spec(_) => ExitCode::from(EXIT_SPEC),
        _ => ExitCode::FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return exit_for(&e);
    }
    match cli.command {
        Command::Run { spec, fig, seed, out } => match run(spec, fig, seed, out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => exit_for(&e),
        },
        Command::Validate { quick, seed } => match validate(quick, seed) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(EXIT_VALIDATION),
            Err(e) => exit_for(&e),
        },
        Command::List => {
            for f in registry() {
                println!("{:<6} {}{}", f.name, f.title, if f.monte_carlo { " [monte carlo]" } else { "" });
            }
            ExitCode::SUCCESS
        }
    }
}
