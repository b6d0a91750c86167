//! Command-line front end: run verification suites against manifests and
//! integrate declared flows on periodic grids.
//!
//! Exit codes: 0 every check passed, 1 at least one check failed,
//! 2 usage or engine error (bad manifest, missing object, CFL violation).

use clap::{Parser, Subcommand};
use fman_forge::error::Result;
use fman_forge::hydro::GridOptions;
use fman_forge::manifest::{builtin_registry, load_builtin, load_builtin_or_path};
use fman_forge::suite::{applicable_suites, run_suite, simulate_flows, RunOptions, Suite};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fman",
    version,
    about = "Verify multiplication, metric, and hermitian structures on manifold patches"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verification suite against a manifest file or builtin
    Check {
        /// Builtin name (see `list-builtins`) or path to a JSON manifest
        manifest: String,
        /// Suite to run: f-manifold, eventual, dual, compat, riemannian,
        /// hydro, tsarev, ttstar, or all
        #[arg(long, default_value = "all")]
        suite: String,
        /// Named vector field to certify (default: `E`, then the first)
        #[arg(long)]
        field: Option<String>,
        /// Named metric — or hermitian data for the ttstar suite
        #[arg(long)]
        metric: Option<String>,
        /// Named eventual-identity field for twisted checks (default: --field)
        #[arg(long)]
        eventual: Option<String>,
        /// Sample points per check [default: 64]
        #[arg(long)]
        points: Option<usize>,
        /// RNG seed [default: manifest's, then 42]
        #[arg(long)]
        seed: Option<u64>,
        /// Pass tolerance [default: manifest's, then the suite default]
        #[arg(long)]
        tol: Option<f64>,
        /// Write the full run report as JSON to this path
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Integrate one or two declared flows on a periodic grid
    Simulate {
        /// Builtin name or path to a JSON manifest (real flavor)
        manifest: String,
        /// Flow name; give twice to also measure the commutation defect
        #[arg(long = "flow", required = true)]
        flows: Vec<String>,
        /// Number of grid cells
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Time step
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Final time
        #[arg(long = "t-end", default_value_t = 0.5)]
        t_end: f64,
        /// Artificial-viscosity coefficient [default: 0.5]
        #[arg(long)]
        viscosity: Option<f64>,
        /// Write the first flow's trajectory as CSV to this path
        #[arg(long)]
        dump: Option<PathBuf>,
        /// RNG seed for the certification checks
        #[arg(long)]
        seed: Option<u64>,
        /// Sample points for the certification checks
        #[arg(long)]
        points: Option<usize>,
        /// Pass tolerance for the certification checks
        #[arg(long)]
        tol: Option<f64>,
    },
    /// List the bundled example manifests
    ListBuiltins,
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Check {
            manifest,
            suite,
            field,
            metric,
            eventual,
            points,
            seed,
            tol,
            json,
        } => {
            let man = load_builtin_or_path(&manifest)?;
            let suite = Suite::parse(&suite)?;
            let opts = RunOptions {
                field,
                metric,
                eventual,
                points,
                seed,
                tol,
            };
            let rep = run_suite(&man, suite, &opts)?;
            print!("{}", rep.table());
            if let Some(path) = json {
                std::fs::write(path, rep.to_json())?;
            }
            Ok(rep.pass)
        }
        Cmd::Simulate {
            manifest,
            flows,
            grid,
            dt,
            t_end,
            viscosity,
            dump,
            seed,
            points,
            tol,
        } => {
            let man = load_builtin_or_path(&manifest)?;
            let mut grid_opts = GridOptions::default()
                .with_cells(grid)
                .with_dt(dt)
                .with_t_end(t_end);
            if let Some(nu) = viscosity {
                grid_opts = grid_opts.with_viscosity(nu);
            }
            let opts = RunOptions {
                seed,
                points,
                tol,
                ..RunOptions::default()
            };
            let out = simulate_flows(&man, &flows, &grid_opts, &opts)?;
            print!("{}", out.report.table());
            if let Some(path) = dump {
                std::fs::write(path, out.trajectory.to_csv())?;
            }
            Ok(out.report.pass)
        }
        Cmd::ListBuiltins => {
            for (name, _) in builtin_registry() {
                let man = load_builtin(name)?;
                let suites: Vec<&str> = applicable_suites(&man)
                    .into_iter()
                    .map(|s| s.name())
                    .collect();
                println!(
                    "{:<12} {:>7} dim {}  suites: {}",
                    name,
                    format!("{:?}", man.flavor()).to_lowercase(),
                    man.patch().dim(),
                    suites.join(", ")
                );
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fman: {e}");
            ExitCode::from(2)
        }
    }
}
