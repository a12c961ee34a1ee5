mod config;
mod scenario;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ScenarioConfig;
use scenario::CliError;

/// Runs Gibbs posterior experiments on shifts of finite type.
#[derive(Parser)]
#[command(name = "thermopost", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its reports.
    Run {
        config: PathBuf,
        /// Report directory; overrides the config's `output_dir`.
        #[arg(long, env = "THERMOPOST_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed; overrides the config's `seed` and `seeds`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a configuration and its input files without writing anything.
    Validate { config: PathBuf },
}

fn run(config: PathBuf, output_dir: Option<PathBuf>, threads: Option<usize>, seed: Option<u64>) -> Result<bool, CliError> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let mut cfg = ScenarioConfig::load(&config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
        cfg.seeds = None;
    }
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let outcome = scenario::execute(&cfg)?;
    outcome.write(&cfg.output_dir)?;
    let summary = &outcome.summary;
    for check in &summary.checks {
        println!(
            "{} {}: {} (threshold {}) — {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.threshold,
            check.detail
        );
    }
    for (key, value) in &summary.info {
        println!("info {key}: {value}");
    }
    println!("reports written to {}", cfg.output_dir.display());
    Ok(summary.passed)
}

fn validate(config: PathBuf) -> Result<bool, CliError> {
    let cfg = ScenarioConfig::load(&config)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "scenario: {}", cfg.scenario.name())?;
    let diags = scenario::diagnose(&cfg, &mut out)?;
    for d in &diags {
        writeln!(out, "error: {d}")?;
    }
    if diags.is_empty() {
        writeln!(out, "ok")?;
    }
    Ok(diags.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Failed checks exit 1; invalid input exits 2.
    let result = match cli.command {
        Command::Run {
            config,
            output_dir,
            threads,
            seed,
        } => run(config, output_dir, threads, seed).map(|ok| if ok { 0 } else { 1 }),
        Command::Validate { config } => validate(config).map(|ok| if ok { 0 } else { 2 }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
