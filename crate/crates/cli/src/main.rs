use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use dynplast_core::config::SimConfig;
use dynplast_core::runner::{make_initial_to_dir, run_to_dir, sweep_to_dir, verify_dir};

/// Explicit elastoplastic wave simulations with dissipative and mixed boundary conditions.
#[derive(Debug, Parser)]
#[command(name = "dynplast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration and write snapshots, ledger and manifest.
    Simulate {
        config: PathBuf,
        /// Output directory (defaults to `output.dir`, then `out/<config name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        snapshot_stride: Option<usize>,
    },
    /// Run the configuration for several dissipative weights plus the limit model.
    Sweep {
        config: PathBuf,
        /// Strictly increasing list, e.g. `10,100,1000`.
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent member runs.
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        #[arg(long)]
        snapshot_stride: Option<usize>,
    },
    /// Re-check a finished run directory.
    Verify {
        dir: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Build the compatible initial state for one λ.
    MakeInitial {
        config: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn load(path: &Path, stride: Option<usize>) -> Result<SimConfig> {
    let mut cfg = SimConfig::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(s) = stride {
        cfg.time.snapshot_stride = s;
    }
    Ok(cfg)
}

fn out_dir(cfg: &SimConfig, config: &Path, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| cfg.output.dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| {
        let stem = config.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from("out").join(stem)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, out, snapshot_stride } => {
            let cfg = load(&config, snapshot_stride)?;
            let dir = out_dir(&cfg, &config, out);
            let outcome = run_to_dir(&cfg, &dir)?;
            let m = &outcome.manifest;
            let ledger = outcome.simulation.ledger();
            println!("steps            {}", m.steps);
            println!("dt               {:.6e}", m.dt);
            println!("snapshots        {}", m.snapshot_records);
            println!("ledger rows      {}", m.ledger_rows);
            println!("initial energy   {:.6e}", m.initial_energy);
            println!("dissipation      {:.6e}", ledger.total_dissipation());
            println!("max |residual|   {:.3e}", ledger.max_abs_residual());
            println!("config hash      {}", m.config_hash);
            println!("output           {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, lambdas, out, workers, snapshot_stride } => {
            if lambdas.len() < 2 {
                Cli::command()
                    .error(clap::error::ErrorKind::TooFewValues, "--lambdas needs at least two values")
                    .exit();
            }
            let cfg = load(&config, snapshot_stride)?;
            let dir = out_dir(&cfg, &config, out);
            let report = sweep_to_dir(&cfg, &lambdas, workers, &dir)?;
            print!("{}", report.to_text());
            println!("output           {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { dir, json } => {
            let report = verify_dir(&dir)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::MakeInitial { config, lambda, out } => {
            let cfg = load(&config, None)?;
            let dir = out.unwrap_or_else(|| out_dir(&cfg, &config, None).join("initial"));
            let report = make_initial_to_dir(&cfg, lambda, &dir)?;
            print!("{}", report.to_text());
            println!("output                  {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
