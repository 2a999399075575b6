//! Command-line experiment runner: execute sweep manifests, validate
//! configs, inspect the platform noise registry, and reproduce the shipped
//! benchmark studies.

mod config;
mod manifest;
mod repro;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, OutputFormat};
use manifest::RunManifest;
use stqs_core::noise::{default_profile, Platform};

#[derive(Parser)]
#[command(
    name = "stqs",
    version,
    about = "Noisy simulator and sweep harness for spatiotemporal quantum sensing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct OutputOverrides {
    /// Output file path (overrides [output].path).
    #[arg(long)]
    out: Option<String>,
    /// Output format: csv or jsonl (overrides [output].format).
    #[arg(long)]
    format: Option<String>,
    /// Master seed (overrides [output].seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 = all cores (overrides [output].jobs).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a sweep manifest from a config file.
    Run {
        /// Path to the TOML config.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputOverrides,
    },
    /// Parse and validate a config file, printing the effective document.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the platform noise-profile registry.
    Profiles,
    /// Run one of the shipped benchmark studies (by id or figN alias).
    Repro {
        /// Study id; list them with `stqs repro list`.
        id: String,
        #[command(flatten)]
        output: OutputOverrides,
    },
}

fn apply_overrides(manifest: &mut RunManifest, overrides: &OutputOverrides) -> Result<(), String> {
    if let Some(out) = &overrides.out {
        manifest.output_path = out.clone();
    }
    if let Some(fmt) = &overrides.format {
        manifest.format = match fmt.as_str() {
            "csv" => OutputFormat::Csv,
            "jsonl" => OutputFormat::Jsonl,
            other => return Err(format!("unknown format '{other}' (want csv or jsonl)")),
        };
    }
    if let Some(seed) = overrides.seed {
        manifest.master_seed = seed;
    }
    if let Some(jobs) = overrides.jobs {
        manifest.jobs = jobs;
    }
    Ok(())
}

fn execute_manifest(mut manifest: RunManifest, overrides: &OutputOverrides) -> ExitCode {
    if let Err(message) = apply_overrides(&mut manifest, overrides) {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    match runner::execute(&manifest) {
        Ok(report) => {
            println!(
                "wrote {} rows to {} ({} failed points)",
                report.rows_written,
                manifest.output_path,
                report.failures.len()
            );
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:?}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output } => match parse_config(&config) {
            Ok(file) => execute_manifest(RunManifest::from_config(file), &output),
            Err(e) => {
                eprintln!("config error: {e:?}");
                ExitCode::from(1)
            }
        },
        Command::Validate { config } => match parse_config(&config) {
            Ok(file) => {
                println!("{}", file.effective_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("config error: {e:?}");
                ExitCode::from(1)
            }
        },
        Command::Profiles => {
            println!(
                "{:<16} {:>10} {:>10} {:>8} {:>8} {:>8} {:>8} {:>10} {:>9} {:>9}",
                "platform", "T1", "T2", "SGE", "TGE", "SPE", "ME", "readout", "1q-gate", "2q-gate"
            );
            for platform in Platform::all() {
                let p = default_profile(platform);
                println!(
                    "{:<16} {:>10} {:>10} {:>8} {:>8} {:>8} {:>8} {:>10} {:>9} {:>9}",
                    platform.name(),
                    si_time(p.t1),
                    si_time(p.t2),
                    pct(p.sge),
                    pct(p.tge),
                    pct(p.spe),
                    pct(p.me.0),
                    si_time(p.durations.readout),
                    si_time(p.durations.single_gate),
                    si_time(p.durations.two_gate),
                );
            }
            ExitCode::SUCCESS
        }
        Command::Repro { id, output } => {
            if id == "list" {
                for study in &repro::STUDIES {
                    println!("{:<24} (alias {:<6}) {}", study.id, study.alias, study.about);
                }
                return ExitCode::SUCCESS;
            }
            match repro::find(&id) {
                Some(study) => {
                    println!("running study '{}' ({})", study.id, study.about);
                    execute_manifest(RunManifest::from_config((study.build)()), &output)
                }
                None => {
                    eprintln!("unknown study '{id}'; available:");
                    for study in &repro::STUDIES {
                        eprintln!("  {} (alias {})", study.id, study.alias);
                    }
                    ExitCode::from(1)
                }
            }
        }
    }
}

fn si_time(seconds: f64) -> String {
    if seconds.is_infinite() {
        "inf".into()
    } else if seconds >= 1.0 {
        format!("{seconds:.0} s")
    } else if seconds >= 1e-3 {
        format!("{:.0} ms", seconds * 1e3)
    } else if seconds >= 1e-6 {
        format!("{:.0} us", seconds * 1e6)
    } else {
        format!("{:.0} ns", seconds * 1e9)
    }
}

fn pct(p: f64) -> String {
    format!("{}%", p * 100.0)
}
