use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ncpflow::driver::{benchmark_heterogeneous, benchmark_momas, run_simulation, RockSource, RunOutcome, SimulationConfig};
use ncpflow::nonlinear::Method;

#[derive(Parser)]
#[command(name = "ncpflow", version, about = "Two-phase hydrogen/water flow with complementarity constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML file.
    Run {
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in benchmark.
    #[command(subcommand)]
    Bench(Bench),
    /// Run every method on both homogeneous benchmarks and print a summary table.
    Sweep {
        #[arg(long, default_value_t = 200)]
        cells: usize,
        #[arg(long, value_delimiter = ',', default_value = "min,fb,sfb")]
        methods: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "sfb")]
    method: String,
    /// Output directory for ledger and snapshots.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the configuration as TOML instead of running it.
    #[arg(long)]
    emit_config: bool,
}

#[derive(Subcommand)]
enum Bench {
    /// Homogeneous gas-injection benchmark.
    Momas {
        #[arg(long, default_value_t = 2e6)]
        pr: f64,
        #[arg(long, default_value_t = 200)]
        cells: usize,
        /// Initial step in years.
        #[arg(long)]
        dt0: Option<f64>,
        /// End time in years.
        #[arg(long)]
        end: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Heterogeneous desk-scale case.
    Hetero {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Permeability raster (m², one value per line).
        #[arg(long, conflicts_with = "seed")]
        perm: Option<PathBuf>,
        /// Porosity used with `--perm`.
        #[arg(long, default_value_t = 0.15)]
        porosity: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

fn summarize(label: &str, outcome: &RunOutcome) {
    let (ts, ns) = outcome.totals().table_cells();
    let status = match &outcome.abort {
        None => "completed".to_string(),
        Some(e) => format!("aborted ({e})"),
    };
    println!(
        "{label:<28} TS {ts:<10} NS {ns:<10} linear {:<8} wall {:>8.2}s  {status}",
        outcome.ledger.total_linear_iterations(),
        outcome.wall_time.as_secs_f64()
    );
}

fn execute(label: &str, mut cfg: SimulationConfig, common: &Common) -> Result<bool> {
    cfg.solver.method = common.method.parse()?;
    if let Some(out) = &common.out {
        cfg.output.directory = Some(out.clone());
    }
    if common.emit_config {
        print!("{}", cfg.to_toml_string()?);
        return Ok(true);
    }
    let outcome = run_simulation(&cfg)?;
    summarize(&format!("{label} [{}]", common.method), &outcome);
    Ok(outcome.completed())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let mut cfg = SimulationConfig::from_file(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(out) = out {
                cfg.output.directory = Some(out);
            }
            let outcome = run_simulation(&cfg)?;
            summarize(&config.display().to_string(), &outcome);
            Ok(outcome.completed())
        }
        Command::Bench(Bench::Momas {
            pr,
            cells,
            dt0,
            end,
            common,
        }) => {
            let mut cfg = benchmark_momas(pr, cells)?;
            if let Some(dt0) = dt0 {
                cfg.time.initial_dt = dt0;
            }
            if let Some(end) = end {
                cfg.time.end = end;
            }
            execute(&format!("momas pr={pr:e} cells={cells}"), cfg, &common)
        }
        Command::Bench(Bench::Hetero {
            dim,
            perm,
            porosity,
            seed,
            common,
        }) => {
            let source = match perm {
                Some(path) => RockSource::Raster {
                    permeability: path,
                    porosity,
                },
                None => RockSource::Synthetic { seed },
            };
            let cfg = benchmark_heterogeneous(dim, source)?;
            execute(&format!("hetero {dim}d"), cfg, &common)
        }
        Command::Sweep { cells, methods } => {
            let methods: Vec<Method> = methods.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
            let mut all_ok = true;
            println!("{:<10} {:<8} {:>12} {:>12} {:>10}", "P_r", "method", "TS", "NS", "wall (s)");
            for pr in [2e6, 2e3] {
                for &m in &methods {
                    let mut cfg = benchmark_momas(pr, cells)?;
                    cfg.solver.method = m;
                    let outcome = run_simulation(&cfg)?;
                    let (ts, ns) = outcome.totals().table_cells();
                    let mark = if outcome.completed() { "" } else { " aborted" };
                    println!(
                        "{:<10} {:<8} {:>12} {:>12} {:>10.2}{mark}",
                        format!("{pr:e}"),
                        m.label(),
                        ts,
                        ns,
                        outcome.wall_time.as_secs_f64()
                    );
                    all_ok &= outcome.completed();
                }
            }
            Ok(all_ok)
        }
    }
}
