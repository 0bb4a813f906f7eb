mod config;
mod output;
mod reproduce;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use execopt::problem::{DhamSettings, SearchSettings};
use execopt::{DangConfig, SolverSpec};

use config::Config;
use reproduce::{Settings, Table};

#[derive(Parser, Debug)]
#[command(name = "execopt", version, about = "Optimal execution schedules under nonlinear transient impact")]
struct Cli {
    /// Worker threads for independent starts and table cells.
    #[arg(long, global = true, env = "EXECOPT_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the problem described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides the seed of the multistart and monotone solvers.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for relative output paths.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Recompute a published table and write it as CSV.
    Reproduce {
        #[arg(value_enum)]
        table: Table,
        /// Fewer starts and a coarser grid.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print a complete config with every default filled in.
    Defaults {
        #[arg(long, value_enum, default_value_t = Method::Dham)]
        solver: Method,
    },
    /// Parse and validate a config without solving.
    ValidateConfig { config: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Dham,
    Dang,
    Perturbative,
    Multistart,
    Monotone,
}

impl Method {
    fn defaults(self) -> SolverSpec {
        match self {
            Method::Dham => SolverSpec::Dham(DhamSettings::default()),
            Method::Dang => SolverSpec::Dang(DangConfig::default()),
            Method::Perturbative => SolverSpec::Perturbative,
            Method::Multistart => SolverSpec::Multistart(SearchSettings::multistart()),
            Method::Monotone => SolverSpec::Monotone(SearchSettings::monotone()),
        }
    }
}

/// Solves, writes the report files and returns whether the solver converged.
fn run(path: &Path, seed: Option<u64>, out_dir: &Path) -> Result<bool> {
    let mut config = Config::load(path)?;
    if let Some(seed) = seed {
        config.solver.set_seed(seed);
    }
    config.resolve_outputs(out_dir);
    let solution = config.problem().solve()?;
    let report = &solution.report;
    output::write_json(&config.output.report, report)?;
    output::write_profile(&config.output.profile, &report.strategy)?;
    if !solution.starts.is_empty() {
        output::write_starts(&config.output.starts, &solution.starts)?;
    }
    println!(
        "solver {:?}: cost {:.6e}, converged {}, termination {:?}, iterations {}",
        report.solver,
        report.cost,
        report.converged(),
        report.metadata.termination,
        report.metadata.iterations
    );
    if let Some(h) = report.metadata.hbar {
        println!("hbar {h:.4}");
    }
    if let Some(e) = report.residual {
        println!("squared residual {e:.3e}");
    }
    if let Some(msg) = &report.metadata.message {
        println!("{msg}");
    }
    println!("report written to {}", config.output.report.display());
    Ok(report.converged())
}

fn execute(cli: Cli) -> Result<ExitCode> {
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Run { config, seed, out_dir } => {
            let converged = run(&config, seed, &out_dir)?;
            Ok(if converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Reproduce {
            table,
            quick,
            starts,
            seed,
            gammas,
            deltas,
            out_dir,
        } => {
            let settings = Settings {
                quick,
                starts,
                seed,
                gammas,
                deltas,
            };
            let path = reproduce::reproduce(table, &settings, &out_dir)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Defaults { solver } => {
            print!("{}", toml::to_string(&Config::with_solver(solver.defaults()))?);
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateConfig { config } => {
            let parsed = Config::load(&config)?;
            parsed.problem().validate()?;
            println!("{}: ok", config.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
