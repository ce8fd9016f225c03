use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nracc::config::{self, Sweep};
use nracc::library;
use nracc::report::{self, Format};
use nracc_core::engine;
use nracc_core::scenario::ScenarioConfig;
use toml::Table;

const OUT_DIR_ENV: &str = "NRACC_OUT_DIR";

#[derive(Parser)]
#[command(name = "nracc", version, about = "Deterministic 5G SA access-control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or shipped scenario and write its reports.
    Run {
        /// Path to a scenario TOML file, or the name of a shipped scenario.
        scenario: String,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: $NRACC_OUT_DIR or ./nracc-out]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metric table formats.
        #[arg(long, value_delimiter = ',', default_value = "csv,json")]
        format: Vec<Format>,
        /// Set one key before validation, e.g. `cells[0].rach.n_preambles=32`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Run once per value, each into its own subdirectory.
        #[arg(long, value_name = "KEY=V1,V2,...")]
        sweep: Option<Sweep>,
    },
    /// Parse and validate a scenario, reporting every error.
    Validate { scenario: String },
    /// List shipped scenarios, or print one with all defaults filled in.
    Scenarios {
        #[arg(long, value_name = "NAME")]
        emit: Option<String>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, seed, out, format, sets, sweep } => {
            let mut table = library::load_table(&scenario)?;
            for s in &sets {
                let (key, value) = s.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
                config::set_key(&mut table, key.trim(), config::parse_literal(value.trim()))?;
            }
            let out = out.unwrap_or_else(default_out_dir);
            match sweep {
                None => run_one(table, seed, &out, &format),
                Some(sweep) => run_sweep(table, seed, &out, &format, &sweep),
            }
        }
        Command::Validate { scenario } => {
            let cfg = config::from_table(library::load_table(&scenario)?)?;
            let ues: u32 = cfg.populations.iter().map(|p| p.count).sum();
            println!(
                "{}: ok ({} cell(s), {} population(s), {ues} UEs, duration {})",
                cfg.name,
                cfg.cells.len(),
                cfg.populations.len(),
                cfg.duration
            );
            Ok(())
        }
        Command::Scenarios { emit: Some(name) } => {
            let Some(b) = library::builtin(&name) else { bail!("no shipped scenario named `{name}`") };
            print!("{}", config::emit(&config::parse_str(b.source)?)?);
            Ok(())
        }
        Command::Scenarios { emit: None } => {
            for b in &library::BUILTINS {
                println!("{:<18} {}", b.name, library::summary(b));
            }
            Ok(())
        }
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("nracc-out"))
}

fn simulate(cfg: &ScenarioConfig, seed: Option<u64>, out: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let seed = seed.unwrap_or(cfg.seed);
    let output = engine::run(cfg, seed)?;
    Ok(report::write_report(out, &output.report, formats)?)
}

fn run_one(table: Table, seed: Option<u64>, out: &Path, formats: &[Format]) -> Result<()> {
    let cfg = config::from_table(table)?;
    for path in simulate(&cfg, seed, out, formats)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// One run per sweep value. Runs share nothing, so they go in parallel.
fn run_sweep(table: Table, seed: Option<u64>, out: &Path, formats: &[Format], sweep: &Sweep) -> Result<()> {
    let mut jobs = Vec::new();
    for (raw, value) in &sweep.values {
        let mut t = table.clone();
        config::set_key(&mut t, &sweep.key, value.clone())?;
        let cfg = config::from_table(t).with_context(|| format!("{}={raw}", sweep.key))?;
        jobs.push((out.join(sweep_dir_name(&sweep.key, raw)), cfg));
    }
    let results: Vec<Result<Vec<PathBuf>>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs.iter().map(|(dir, cfg)| s.spawn(move || simulate(cfg, seed, dir, formats))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep run panicked")).collect()
    });
    for ((dir, _), r) in jobs.iter().zip(results) {
        r.with_context(|| format!("run into {}", dir.display()))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn sweep_dir_name(key: &str, value: &str) -> String {
    let clean = |s: &str| -> String {
        s.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' }).collect()
    };
    format!("{}={}", clean(key), clean(value))
}
