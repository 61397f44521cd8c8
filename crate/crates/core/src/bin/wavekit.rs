use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavekit::harness::{run_sweep, write_outputs, ExperimentConfig};
use wavekit::oracle::default_suites;
use wavekit::Error;

#[derive(Parser)]
#[command(name = "wavekit", version, about = "Wavenumber-domain MIMO capacity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write results.csv, summary.csv and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's output_path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the config's seed list with this single seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the brute-force reference suites on small instances.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

fn load(path: &std::path::Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(CONFIG_ERROR)
    })
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config { .. } => ExitCode::from(CONFIG_ERROR),
        _ => ExitCode::from(RUNTIME_ERROR),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!(
                    "ok: {} sweep values x {} seeds x {} schemes",
                    cfg.sweep_values.len(),
                    cfg.seeds.len(),
                    cfg.schemes.len()
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run {
            config,
            out,
            seed_override,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(s) = seed_override {
                cfg.seeds = vec![s];
            }
            let dir = out.unwrap_or_else(|| cfg.output_path.clone());
            let result = run_sweep(&cfg).and_then(|res| {
                let paths = write_outputs(&dir, &cfg, &res)?;
                Ok((res, paths))
            });
            match result {
                Ok((res, paths)) => {
                    for a in &res.aggregates {
                        println!(
                            "{:<16} value {:>8} mean {:>10.4} bits  stderr {:.4}",
                            a.scheme.name(),
                            a.sweep_value,
                            a.mean_capacity_bits,
                            a.stderr_capacity_bits
                        );
                    }
                    for g in &res.wd_over_sd_db {
                        println!("WD_DC / SPATIAL_DIVISION at {}: {:.3} dB", g.sweep_value, g.ratio_db);
                    }
                    for f in &res.failures {
                        let scheme = f.scheme.map(|s| s.name()).unwrap_or("-");
                        eprintln!(
                            "failed: value {} seed {} {}: {}",
                            f.sweep_value, f.seed, scheme, f.error
                        );
                    }
                    for p in paths {
                        println!("wrote {}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
        Command::Oracle { seed } => match default_suites(seed) {
            Ok(suites) => {
                let mut all = true;
                for s in &suites {
                    all &= s.ok();
                    println!(
                        "{} {}: {}/{} (worst gap {:.3e})",
                        if s.ok() { "PASS" } else { "FAIL" },
                        s.name,
                        s.passed,
                        s.checked,
                        s.worst_gap
                    );
                }
                if all {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(RUNTIME_ERROR)
                }
            }
            Err(e) => exit_for(&e),
        },
    }
}
