// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rwsd::cli::{self, exit, ExperimentConfig, SweepConfig};
use rwsd::Error;

/// Simulate random walks with spatio-temporal drift and check them against
/// their predicted limit laws.
#[derive(Parser)]
#[command(name = "rwsd", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Format of what is printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ensemble, evaluate it and write all artifacts.
    Run { config: PathBuf },
    /// Classify a grid of (alpha, beta) points and write phase_map.csv.
    Sweep { config: PathBuf },
    /// Print the predicted limit law without simulating.
    Predict { config: PathBuf },
    /// Sample the stationary law of the critical-line diffusion.
    SdeSample { config: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn load(args: &Args, path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        if let Some(eval) = cfg.eval.as_mut() {
            eval.seed = seed;
        }
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if let Some(dir) = &args.out_dir {
        cfg.outputs = dir.clone();
    }
    Ok(cfg)
}

fn run(args: &Args) -> Result<i32, Error> {
    if let Some(w) = args.workers {
        // The global pool also drives the statistics; ignore a second init.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    match &args.command {
        Command::Run { config } => {
            let cfg = load(args, config)?;
            let outcome = cli::run_experiment(&cfg)?;
            match args.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&outcome.report_json).expect("serializable")),
                Format::Csv => print!("{}", cli::metrics_csv(&outcome.report)),
            }
            Ok(outcome.exit_code)
        }
        Command::Sweep { config } => {
            let mut cfg = SweepConfig::load(config)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if let Some(dir) = &args.out_dir {
                cfg.outputs = dir.clone();
            }
            let points = cli::write_phase_map(&cfg)?;
            match args.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&points).expect("serializable")),
                Format::Csv => print!("{}", cli::phase_map_csv(&points)),
            }
            Ok(exit::PASS)
        }
        Command::Predict { config } => {
            let cfg = load(args, config)?;
            let (regime, law) = cli::predict(&cfg)?;
            match args.format {
                Format::Json => {
                    let value = serde_json::json!({
                        "schema_version": cli::SCHEMA_VERSION,
                        "regime": regime,
                        "law": cli::law_to_json(&law),
                    });
                    println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
                }
                Format::Csv => {
                    println!("regime,law");
                    println!("{regime},{}", law.kind());
                }
            }
            Ok(exit::PASS)
        }
        Command::SdeSample { config } => {
            let cfg = load(args, config)?;
            let samples = cli::sde_sample(&cfg)?;
            std::fs::create_dir_all(&cfg.outputs)?;
            std::fs::write(cfg.outputs.join("sde_samples.csv"), cli::samples_csv(&samples))?;
            match args.format {
                Format::Json => {
                    let rows: Vec<Vec<f64>> = samples.row_iter().map(|r| r.iter().copied().collect()).collect();
                    println!("{}", serde_json::to_string(&rows).expect("serializable"));
                }
                Format::Csv => print!("{}", cli::samples_csv(&samples)),
            }
            Ok(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match run(&args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("rwsd: {err}");
            cli::exit_code_for(&err)
        }
    };
    ExitCode::from(code as u8)
}
