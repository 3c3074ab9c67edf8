//! CSV outputs. Every float is written with 17 significant digits so files
//! parse back to the exact doubles.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use pfs_core::flowstate::{depression_ratio, piezometric_head};
use pfs_core::{CellGeometry, CellState, FlowError, Observer, PhysicalConstants, RecordKind, Simulation, StepReport};

pub const HEADER: [&str; 7] = ["t", "x", "A", "Q", "E", "piezo", "ratio"];
pub const DIAGNOSTICS_HEADER: [&str; 7] = ["step", "t", "dt", "mass", "entropy", "transitions", "fallbacks"];

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One `t,x,A,Q,E,piezo,ratio` row.
pub fn state_row(t: f64, geom: &CellGeometry, state: &CellState, consts: &PhysicalConstants) -> Result<[String; 7], FlowError> {
    Ok([
        float(t),
        float(geom.x_center),
        float(state.area),
        float(state.discharge),
        state.regime.indicator().to_string(),
        float(piezometric_head(geom, state, consts)?),
        float(depression_ratio(geom, state)),
    ])
}

/// Writes a full profile with a header row.
pub fn write_profile<W: Write>(
    out: W,
    t: f64,
    geoms: &[CellGeometry],
    cells: &[CellState],
    consts: &PhysicalConstants,
) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for (g, s) in geoms.iter().zip(cells) {
        w.write_record(state_row(t, g, s, consts)?)?;
    }
    w.flush()?;
    Ok(())
}

/// Streams `probes.csv`, `profiles.csv` and `diagnostics.csv` during a run.
/// The first write error is kept and later records are dropped.
pub struct RunWriter {
    probes: csv::Writer<File>,
    profiles: csv::Writer<File>,
    diagnostics: csv::Writer<File>,
    probe_cells: Vec<usize>,
    error: Option<Box<dyn std::error::Error>>,
}

impl RunWriter {
    pub fn create(dir: &Path, probe_cells: Vec<usize>) -> Result<Self, Box<dyn std::error::Error>> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str, header: &[&str]| -> Result<csv::Writer<File>, Box<dyn std::error::Error>> {
            let mut w = csv::Writer::from_path(dir.join(name))?;
            w.write_record(header)?;
            Ok(w)
        };
        Ok(Self {
            probes: open("probes.csv", &HEADER)?,
            profiles: open("profiles.csv", &HEADER)?,
            diagnostics: open("diagnostics.csv", &DIAGNOSTICS_HEADER)?,
            probe_cells,
            error: None,
        })
    }

    /// Diagnostics row for the initial state.
    pub fn start(&mut self, sim: &Simulation) {
        let d = &sim.state().diagnostics;
        let row = ["0".to_string(), float(sim.time()), float(0.0), float(d.mass), float(d.entropy), "0".into(), "0".into()];
        self.keep(|w| w.diagnostics.write_record(&row).map_err(Into::into));
    }

    pub fn finish(mut self) -> Result<(), Box<dyn std::error::Error>> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.probes.flush()?;
        self.profiles.flush()?;
        self.diagnostics.flush()?;
        Ok(())
    }

    fn keep(&mut self, f: impl FnOnce(&mut Self) -> Result<(), Box<dyn std::error::Error>>) {
        if self.error.is_none() {
            if let Err(e) = f(self) {
                self.error = Some(e);
            }
        }
    }

    fn rows(sim: &Simulation, cells: &[usize]) -> Result<Vec<[String; 7]>, FlowError> {
        let geoms = sim.geometry().cells();
        cells.iter().map(|&i| state_row(sim.time(), &geoms[i], &sim.cells()[i], sim.consts())).collect()
    }
}

impl Observer for RunWriter {
    fn on_step(&mut self, sim: &Simulation, report: &StepReport) {
        let fallbacks = report.transitions.iter().filter(|(_, info)| info.fallback.is_some()).count();
        let row = [
            sim.state().step.to_string(),
            float(report.t),
            float(report.dt),
            float(report.mass.1),
            float(report.entropy.1),
            report.transitions.len().to_string(),
            fallbacks.to_string(),
        ];
        self.keep(|w| w.diagnostics.write_record(&row).map_err(Into::into));
    }

    fn on_record(&mut self, sim: &Simulation, kind: RecordKind) {
        self.keep(|w| {
            let (target, rows) = match kind {
                RecordKind::Cadence => (&mut w.probes, Self::rows(sim, &w.probe_cells)?),
                RecordKind::Snapshot => {
                    let all: Vec<usize> = (0..sim.cells().len()).collect();
                    (&mut w.profiles, Self::rows(sim, &all)?)
                }
            };
            for r in rows {
                target.write_record(&r)?;
            }
            Ok(())
        });
    }
}
