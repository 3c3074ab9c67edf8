//! `pfs`: run pipe-flow scenarios and compare their outputs.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 solver failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

mod compare;
mod output;
mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use pfs_core::{AtildeStrategy, PipeGeometry, Simulation, SolverError};

use output::{write_profile, RunWriter};
use scenario::{parse_scenario, Scenario};

const CONFIG_ERROR: u8 = 2;
const SOLVER_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "pfs", version, about = "Mixed free-surface / pressurized flow in closed pipes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write probes.csv, profiles.csv and diagnostics.csv.
    Run {
        scenario: PathBuf,
        /// Output directory [default: out/<scenario name>]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the linearization strategy of the scenario.
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Override the Courant number of the scenario.
        #[arg(long)]
        cfl: Option<f64>,
        /// Validate the scenario and print the mesh without running.
        #[arg(long)]
        dry_run: bool,
    },
    /// Per-column max and L2 differences between two run directories.
    Compare { a: PathBuf, b: PathBuf },
    /// Print the still-water initial state of a scenario.
    Steady { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Classical,
    Exact,
}

/// A failure carrying its exit code.
struct Failure(u8, String);

impl Failure {
    fn config(e: impl ToString) -> Self {
        Failure(CONFIG_ERROR, e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, strategy, cfl, dry_run } => run(&scenario, out, strategy, cfl, dry_run),
        Command::Compare { a, b } => compare(&a, &b),
        Command::Steady { scenario } => steady(&scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

fn load(path: &Path) -> Result<(Scenario, PipeGeometry), Failure> {
    let scenario = parse_scenario(path).map_err(Failure::config)?;
    let pipe = scenario.geometry().map_err(Failure::config)?;
    Ok((scenario, pipe))
}

fn run(path: &Path, out: Option<PathBuf>, strategy: Option<Strategy>, cfl: Option<f64>, dry_run: bool) -> Result<(), Failure> {
    let (mut scenario, pipe) = load(path)?;
    if let Some(s) = strategy {
        scenario.config.strategy = match s {
            Strategy::Classical => AtildeStrategy::Classical,
            Strategy::Exact => AtildeStrategy::exact(),
        };
    }
    if let Some(cfl) = cfl {
        scenario.config.cfl = cfl;
    }
    let initial = scenario.initial_state(&pipe).map_err(Failure::config)?;
    let consts = scenario.consts;
    let probe_cells: Vec<usize> = scenario.probes.iter().map(|&x| pipe.locate(x)).collect();
    let mut sim = Simulation::new(pipe, consts, scenario.config.clone(), initial).map_err(Failure::config)?;
    if dry_run {
        return print_mesh(&sim).map_err(Failure::config);
    }
    let dir = out.unwrap_or_else(|| Path::new("out").join(&scenario.name));
    let mut writer = RunWriter::create(&dir, probe_cells).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
    writer.start(&sim);
    let initial_mass = sim.state().diagnostics.mass;
    info!("running {} to t = {} into {}", scenario.name, scenario.config.t_end, dir.display());
    let outcome = sim.run(&mut writer);
    let written = writer.finish();
    if let Err(e) = outcome {
        let code = if matches!(e, SolverError::Config(_)) { CONFIG_ERROR } else { SOLVER_FAILURE };
        let dump = dir.join("last_state.csv");
        let saved = std::fs::File::create(&dump)
            .map_err(|e| e.into())
            .and_then(|f| write_profile(f, sim.time(), sim.geometry().cells(), sim.cells(), sim.consts()));
        let note = match saved {
            Ok(()) => format!("last valid state (t = {}) written to {}", sim.time(), dump.display()),
            Err(d) => format!("could not write {}: {d}", dump.display()),
        };
        return Err(Failure(code, format!("{e}\n{note}")));
    }
    written.map_err(|e| Failure(SOLVER_FAILURE, format!("writing outputs: {e}")))?;
    let d = &sim.state().diagnostics;
    println!(
        "{}: t = {} after {} steps; relative mass change {:.3e}; transition solves {} (rejected fronts {}); exact linearization fallbacks {}; time-step halvings {}",
        scenario.name,
        sim.time(),
        sim.state().step,
        (d.mass - initial_mass) / initial_mass,
        d.transitions.solves,
        d.transitions.fallbacks,
        d.atilde_fallbacks,
        d.halvings
    );
    Ok(())
}

fn print_mesh(sim: &Simulation) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["cell", "x", "dx", "D", "b", "sin_theta", "A", "Q", "E"])?;
    for (i, (g, s)) in sim.geometry().cells().iter().zip(sim.cells()).enumerate() {
        w.write_record([
            i.to_string(),
            output::float(g.x_center),
            output::float(g.dx),
            output::float(2.0 * g.radius),
            output::float(g.elevation),
            output::float(g.sin_theta),
            output::float(s.area),
            output::float(s.discharge),
            s.regime.indicator().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn compare(a: &Path, b: &Path) -> Result<(), Failure> {
    let diffs = compare::compare_runs(a, b).map_err(Failure::config)?;
    let mut stdout = std::io::stdout().lock();
    let mut write = || -> std::io::Result<()> {
        writeln!(stdout, "file,column,rows,max,l2")?;
        for d in &diffs {
            writeln!(stdout, "{},{},{},{:.6e},{:.6e}", d.file, d.column, d.rows, d.max, d.l2)?;
        }
        Ok(())
    };
    write().map_err(|e| Failure::config(e.to_string()))
}

fn steady(path: &Path) -> Result<(), Failure> {
    let (scenario, pipe) = load(path)?;
    if !scenario.is_steady() {
        return Err(Failure::config(format!("{}: initial condition is not a steady state", path.display())));
    }
    let cells = scenario.initial_state(&pipe).map_err(Failure::config)?;
    write_profile(std::io::stdout().lock(), 0.0, pipe.cells(), &cells, &scenario.consts).map_err(Failure::config)
}
