use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hwdd::config::RunConfig;
use hwdd::metrics::{compare_runs, run_study, write_study};
use hwdd::workflow::{data_dir, generate_data_files, run_to_dir};
use hwdd::{Error, Result};

/// Data-driven elastoplasticity on yield surfaces in Haigh-Westergaard
/// coordinates, with a classical return-mapping reference solver.
#[derive(Parser, Debug)]
#[command(name = "hwdd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the tension-torsion yield points and tensile paths.
    GenData {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to the data directory of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the configured boundary-value problem.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// datadriven or reference; defaults to the solver of the config.
        #[arg(long)]
        solver: Option<String>,
        /// Output directory; defaults to the output of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error of run A against reference run B.
    Compare {
        run: PathBuf,
        reference: PathBuf,
        /// Directory for errors.csv; defaults to the directory of run A.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the convergence study of the config.
    Study {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// Sizes the global worker pool from `HWDD_THREADS` (unset or 0: one per core).
fn init_threads() -> Result<()> {
    let threads = match std::env::var("HWDD_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("HWDD_THREADS must be a non-negative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn execute(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::GenData { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let dir = data_dir(&cfg, out.as_deref());
            let s = generate_data_files(&cfg, &dir)?;
            println!(
                "yield points: {}  tensile records: {}  increments: {} ({} inelastic)  phi(0): {:.6e}  seed: {}",
                s.yield_points, s.tensile_records, s.increments, s.inelastic, s.phi0, s.seed
            );
            println!("data written to {}", dir.display());
        }
        Command::Run { config, solver, out } => {
            let cfg = load_config(config.as_deref())?;
            let name = solver.unwrap_or_else(|| cfg.solver.clone());
            let dir = out.unwrap_or_else(|| cfg.output.clone());
            let s = run_to_dir(&cfg, &name, &dir)?;
            println!(
                "{name}: {} steps  max displacement: {:.6e}  max principal stress: {:.6e}  max alpha_y: {:.6}",
                s.steps, s.max_displacement, s.max_principal_stress, s.max_alpha_y
            );
            println!("results written to {}", dir.display());
        }
        Command::Compare { run, reference, out } => {
            let report = compare_runs(&run, &reference)?;
            let dir = out.unwrap_or_else(|| run.clone());
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let path = dir.join("errors.csv");
            report.write_csv(&path)?;
            println!("rmsd: {:.6e}  steps: {}  norm stiffness: {:e}", report.rmsd, report.per_step.len(), report.young);
            println!("per-step errors written to {}", path.display());
        }
        Command::Study { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let dir = out.unwrap_or_else(|| cfg.output.clone());
            let report = run_study(&cfg)?;
            write_study(&dir, &report)?;
            for row in report.rows() {
                match row.rmsd {
                    Some(r) => println!("n2 {:>6}  n_p {:>3}  seed {:>4}  rmsd {r:.6e}", row.n2, row.n_p, row.seed),
                    None => println!("n2 {:>6}  n_p {:>3}  seed {:>4}  FAILED", row.n2, row.n_p, row.seed),
                }
            }
            println!("study written to {}", dir.display());
            let failed = report.failures();
            if failed > 0 {
                eprintln!("{failed} of {} study cells failed, see study_status.csv", report.cells.len());
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| execute(cli.command));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
