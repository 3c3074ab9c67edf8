//! Explicit first-order time marching.
//!
//! Each step solves every interface once (ghost cells included), then
//! updates `A` with the interface discharges and `Q` with the momentum flux
//! evaluated at the traces in the geometry of the updated cell:
//!
//! ```text
//! A_i -= dt/dx (QMP_{i+1/2} - QMP_{i-1/2})
//! Q_i -= dt/dx (F(AM_{i+1/2}, QMP_{i+1/2}) - F(AP_{i-1/2}, QMP_{i-1/2}))
//! ```
//!
//! Sources never appear explicitly; they live in the traces.

pub mod boundary;
mod regime;
mod steady;

pub use boundary::{ghost_cell, state_for_piezometric_head, Boundary, End, Hydrograph};
pub use regime::update_regime;
pub use steady::{anchor_head, build_steady_state, regimes_for_head, Anchor};

use log::warn;
use thiserror::Error;

use crate::flowstate::{celerity, entropy, momentum_flux, CellState, FlowError, PhysicalConstants, Regime, MIN_AREA};
use crate::geometry::{CellGeometry, PipeGeometry};
use crate::riemann::{solve_interface, Fallback, InterfaceInput, InterfaceSolution, RiemannError, TransitionInfo};
use crate::wellbalance::{atilde_field, AtildeStrategy, WellBalanceError};

/// Time-step halvings allowed before a positivity failure is fatal.
const MAX_HALVINGS: usize = 10;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("interface {interface} at t = {t}: {source}")]
    Interface {
        interface: usize,
        t: f64,
        #[source]
        source: RiemannError,
    },
    #[error("cell {cell} at t = {t}: {source}")]
    Cell {
        cell: usize,
        t: f64,
        #[source]
        source: FlowError,
    },
    #[error("wet area of cell {cell} not positive at t = {t} after {MAX_HALVINGS} time-step halvings")]
    Positivity { cell: usize, t: f64 },
    #[error("non-finite wave speed in cell {cell} at t = {t}")]
    NonFiniteSpeed { cell: usize, t: f64 },
    #[error(transparent)]
    Steady(#[from] WellBalanceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Courant number.
    pub cfl: f64,
    pub t_end: f64,
    pub strategy: AtildeStrategy,
    pub friction: bool,
    pub upstream: Boundary,
    pub downstream: Boundary,
    /// Interval between cadence records.
    pub output_interval: Option<f64>,
    /// Times of full-profile snapshots.
    pub snapshot_times: Vec<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            cfl: 0.8,
            t_end: 0.0,
            strategy: AtildeStrategy::Classical,
            friction: false,
            upstream: Boundary::closed(),
            downstream: Boundary::closed(),
            output_interval: None,
            snapshot_times: Vec::new(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut bad = Vec::new();
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            bad.push(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            bad.push(format!("t_end must be finite and non-negative, got {}", self.t_end));
        }
        if let Some(dt) = self.output_interval {
            if !(dt > 0.0) {
                bad.push(format!("output interval must be positive, got {dt}"));
            }
        }
        if let AtildeStrategy::Exact { tolerance, .. } = self.strategy {
            if !(tolerance > 0.0) {
                bad.push(format!("exact strategy tolerance must be positive, got {tolerance}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TransitionStats {
    /// Accepted nonlinear transition solves.
    pub solves: usize,
    pub max_residual: f64,
    pub max_rh_mismatch: f64,
    /// Fronts rejected for violating the admissibility bounds.
    pub inadmissible: usize,
    /// Transition interfaces handled by the non-transition solver because
    /// the front was rejected.
    pub fallbacks: usize,
}

impl TransitionStats {
    fn record(&mut self, info: &TransitionInfo) {
        if let Some(reason) = info.fallback {
            self.fallbacks += 1;
            if reason == Fallback::Inadmissible {
                self.inadmissible += 1;
            }
            return;
        }
        self.solves += 1;
        self.max_residual = self.max_residual.max(info.residual);
        self.max_rh_mismatch = self.max_rh_mismatch.max(info.rh_mismatch);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    /// `sum A_i dx_i`.
    pub mass: f64,
    /// `sum E_i dx_i` of the mathematical entropy.
    pub entropy: f64,
    pub transitions: TransitionStats,
    /// Cells whose exact `A~` system fell back to the classical mean.
    pub atilde_fallbacks: usize,
    /// Time-step halvings after positivity failures.
    pub halvings: usize,
    /// Largest `(|u| + c) dt / dx` of an accepted step.
    pub max_courant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub t: f64,
    pub step: usize,
    pub cells: Vec<CellState>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Time after the step.
    pub t: f64,
    /// Discharge through the upstream and downstream ends during the step.
    pub boundary_discharge: (f64, f64),
    /// Mass before and after the step.
    pub mass: (f64, f64),
    /// Entropy before and after the step.
    pub entropy: (f64, f64),
    /// Transition interfaces, indexed from the upstream ghost interface.
    pub transitions: Vec<(usize, TransitionInfo)>,
    pub halvings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Cadence,
    Snapshot,
}

/// Callbacks of [`Simulation::run`].
pub trait Observer {
    fn on_step(&mut self, _sim: &Simulation, _report: &StepReport) {}
    fn on_record(&mut self, _sim: &Simulation, _kind: RecordKind) {}
}

impl Observer for () {}

/// `sum A_i dx_i`, summed in cell order.
pub fn total_mass(cells: &[CellState], geoms: &[CellGeometry]) -> f64 {
    cells.iter().zip(geoms).fold(0.0, |m, (c, g)| m + c.area * g.dx)
}

/// `sum E_i dx_i`, summed in cell order.
pub fn total_entropy(cells: &[CellState], geoms: &[CellGeometry], consts: &PhysicalConstants) -> Result<f64, FlowError> {
    cells.iter().zip(geoms).try_fold(0.0, |m, (c, g)| Ok(m + entropy(g, c, consts)? * g.dx))
}

/// `cfl min dx / max(|u| + c)` over the given cells.
pub fn cfl_timestep(
    cells: &[CellState],
    geoms: &[CellGeometry],
    cfl: f64,
    consts: &PhysicalConstants,
) -> Result<f64, SolverError> {
    let mut dt = f64::INFINITY;
    for (i, (s, g)) in cells.iter().zip(geoms).enumerate() {
        let c = celerity(g, s.area, s.regime, consts).map_err(|source| SolverError::Cell { cell: i, t: f64::NAN, source })?;
        let speed = s.velocity().abs() + c;
        if !speed.is_finite() {
            return Err(SolverError::NonFiniteSpeed { cell: i, t: f64::NAN });
        }
        dt = dt.min(cfl * g.dx / speed);
    }
    Ok(dt)
}

/// Ghost states beyond both ends at time `t`, and whether either hydrograph
/// was evaluated outside its range.
pub fn apply_boundary_conditions(
    cells: &[CellState],
    geometry: &PipeGeometry,
    config: &SimulationConfig,
    consts: &PhysicalConstants,
    t: f64,
) -> Result<(CellState, CellState, bool), FlowError> {
    let g = geometry.cells();
    let n = cells.len();
    let (up, c1) = ghost_cell(&config.upstream, End::Upstream, &g[0], &cells[0], t, consts)?;
    let (down, c2) = ghost_cell(&config.downstream, End::Downstream, &g[n - 1], &cells[n - 1], t, consts)?;
    Ok((up, down, c1 || c2))
}

/// Momentum flux at an interface trace. A free-surface trace above the full
/// section is a linearization overshoot of a filling interface; it is read
/// at the full section rather than on the stiff pressurized branch.
fn trace_flux(
    geom: &CellGeometry,
    area: f64,
    discharge: f64,
    regime: Regime,
    consts: &PhysicalConstants,
) -> Result<f64, FlowError> {
    let area = match regime {
        Regime::FreeSurface => area.min(geom.section),
        Regime::Pressurized => area,
    };
    momentum_flux(geom, area, discharge, regime, consts)
}

#[derive(Debug, Clone)]
pub struct Simulation {
    geometry: PipeGeometry,
    /// Geometry with one ghost copy at each end.
    extended: Vec<CellGeometry>,
    consts: PhysicalConstants,
    config: SimulationConfig,
    state: SimulationState,
    clamp_warned: bool,
}

impl Simulation {
    pub fn new(
        geometry: PipeGeometry,
        consts: PhysicalConstants,
        config: SimulationConfig,
        initial: Vec<CellState>,
    ) -> Result<Self, SolverError> {
        let mut bad = config.validate().err().unwrap_or_default();
        if let Err(e) = consts.validate() {
            bad.push(e);
        }
        if initial.len() != geometry.len() {
            bad.push(format!("{} initial cells for {} mesh cells", initial.len(), geometry.len()));
        }
        for (i, (s, g)) in initial.iter().zip(geometry.cells()).enumerate() {
            if !(s.area > MIN_AREA && s.area.is_finite() && s.discharge.is_finite()) {
                bad.push(format!("cell {i}: invalid initial state A = {}, Q = {}", s.area, s.discharge));
            } else if s.regime == Regime::FreeSurface && s.area > g.section * (1.0 + 1e-12) {
                bad.push(format!("cell {i}: free-surface wet area {} exceeds the full section {}", s.area, g.section));
            }
        }
        if !bad.is_empty() {
            return Err(SolverError::Config(bad));
        }
        let cells = geometry.cells();
        let mut extended = Vec::with_capacity(cells.len() + 2);
        let mut up = cells[0];
        up.x_center -= up.dx;
        let mut down = cells[cells.len() - 1];
        down.x_center += down.dx;
        extended.push(up);
        extended.extend_from_slice(cells);
        extended.push(down);
        let mass = total_mass(&initial, cells);
        let entropy = total_entropy(&initial, cells, &consts).map_err(|source| SolverError::Cell { cell: 0, t: 0.0, source })?;
        let state = SimulationState {
            t: 0.0,
            step: 0,
            cells: initial,
            diagnostics: Diagnostics { mass, entropy, ..Diagnostics::default() },
        };
        Ok(Self { geometry, extended, consts, config, state, clamp_warned: false })
    }

    pub fn geometry(&self) -> &PipeGeometry {
        &self.geometry
    }

    pub fn consts(&self) -> &PhysicalConstants {
        &self.consts
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn state(&self) -> &SimulationState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn cells(&self) -> &[CellState] {
        &self.state.cells
    }

    fn extended_cells(&mut self) -> Result<Vec<CellState>, SolverError> {
        let t = self.state.t;
        let (up, down, clamped) =
            apply_boundary_conditions(&self.state.cells, &self.geometry, &self.config, &self.consts, t)
                .map_err(|source| SolverError::Cell { cell: 0, t, source })?;
        if clamped && !self.clamp_warned {
            warn!("boundary hydrograph evaluated outside its time range at t = {t}; holding the end value");
            self.clamp_warned = true;
        }
        let mut ext = Vec::with_capacity(self.state.cells.len() + 2);
        ext.push(up);
        ext.extend_from_slice(&self.state.cells);
        ext.push(down);
        Ok(ext)
    }

    /// Interface solutions for the extended cells, upstream ghost first.
    pub fn solve_interfaces(&self, ext: &[CellState]) -> Result<(Vec<InterfaceSolution>, usize), SolverError> {
        let g = &self.extended;
        let (atilde, fallbacks) = atilde_field(self.config.strategy, g, ext, &self.consts, self.config.friction);
        let sols = (0..ext.len() - 1)
            .map(|j| {
                let input = InterfaceInput {
                    left_geom: &g[j],
                    right_geom: &g[j + 1],
                    left: ext[j],
                    right: ext[j + 1],
                    atilde: atilde[j],
                    consts: &self.consts,
                    friction: self.config.friction,
                };
                solve_interface(&input).map_err(|source| SolverError::Interface { interface: j, t: self.state.t, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((sols, fallbacks))
    }

    /// `Err(Ok(i))` when cell `i` loses positivity, which a shorter step can
    /// cure; `Err(Err(..))` for a dry trace, which it cannot.
    #[allow(clippy::type_complexity)]
    fn update(&self, sols: &[InterfaceSolution], dt: f64) -> Result<Vec<CellState>, Result<usize, (usize, FlowError)>> {
        let k = &self.consts;
        self.state
            .cells
            .iter()
            .zip(self.geometry.cells())
            .enumerate()
            .map(|(i, (s, g))| {
                let (minus, plus) = (&sols[i], &sols[i + 1]);
                let ratio = dt / g.dx;
                let area = s.area - ratio * (plus.qmp - minus.qmp);
                let f_plus = trace_flux(g, plus.am, plus.qmp, plus.left_regime, k).map_err(|e| Err((i, e)))?;
                let f_minus = trace_flux(g, minus.ap, minus.qmp, minus.right_regime, k).map_err(|e| Err((i, e)))?;
                let discharge = s.discharge - ratio * (f_plus - f_minus);
                if !(area > MIN_AREA && area.is_finite() && discharge.is_finite()) {
                    return Err(Ok(i));
                }
                Ok(CellState::new(area, discharge, s.regime))
            })
            .collect()
    }

    /// One step of at most the CFL time step.
    pub fn step(&mut self) -> Result<StepReport, SolverError> {
        self.step_until(f64::INFINITY)
    }

    /// One step, shortened if needed so that the time does not pass
    /// `target`; landing on `target` sets the time to it exactly.
    pub fn step_until(&mut self, target: f64) -> Result<StepReport, SolverError> {
        let t = self.state.t;
        let ext = self.extended_cells()?;
        let dt_cfl = cfl_timestep(&ext, &self.extended, self.config.cfl, &self.consts).map_err(|e| match e {
            SolverError::Cell { cell, source, .. } => SolverError::Cell { cell, t, source },
            SolverError::NonFiniteSpeed { cell, .. } => SolverError::NonFiniteSpeed { cell, t },
            other => other,
        })?;
        let (mut dt, mut lands) = if dt_cfl >= target - t { (target - t, true) } else { (dt_cfl, false) };
        let (sols, atilde_fallbacks) = self.solve_interfaces(&ext)?;
        let mut halvings = 0;
        let updated = loop {
            match self.update(&sols, dt) {
                Ok(cells) => break cells,
                Err(Err((cell, source))) => return Err(SolverError::Cell { cell, t, source }),
                Err(Ok(cell)) if halvings < MAX_HALVINGS => {
                    halvings += 1;
                    dt *= 0.5;
                    lands = false;
                    warn!("positivity lost in cell {cell} at t = {t}; halving the time step to {dt}");
                }
                Err(Ok(cell)) => return Err(SolverError::Positivity { cell, t }),
            }
        };
        let previous: Vec<Regime> = self.state.cells.iter().map(|c| c.regime).collect();
        let areas: Vec<f64> = updated.iter().map(|c| c.area).collect();
        let sections: Vec<f64> = self.geometry.cells().iter().map(|g| g.section).collect();
        let regimes = update_regime(&previous, &areas, &sections);
        let cells: Vec<CellState> =
            updated.iter().zip(regimes).map(|(c, e)| CellState::new(c.area, c.discharge, e)).collect();

        let new_t = if lands { target } else { t + dt };
        let geoms = self.geometry.cells();
        let mass = total_mass(&cells, geoms);
        let entropy =
            total_entropy(&cells, geoms, &self.consts).map_err(|source| SolverError::Cell { cell: 0, t: new_t, source })?;
        let courant = ext
            .iter()
            .zip(&self.extended)
            .map(|(s, g)| {
                let c = celerity(g, s.area, s.regime, &self.consts).unwrap_or(f64::INFINITY);
                (s.velocity().abs() + c) * dt / g.dx
            })
            .fold(0.0, f64::max);

        let transitions: Vec<(usize, TransitionInfo)> =
            sols.iter().enumerate().filter_map(|(j, s)| s.transition.map(|t| (j, t))).collect();
        let d = &mut self.state.diagnostics;
        let report = StepReport {
            dt,
            t: new_t,
            boundary_discharge: (sols[0].qmp, sols[sols.len() - 1].qmp),
            mass: (d.mass, mass),
            entropy: (d.entropy, entropy),
            transitions,
            halvings,
        };
        for (_, info) in &report.transitions {
            d.transitions.record(info);
        }
        d.mass = mass;
        d.entropy = entropy;
        d.atilde_fallbacks += atilde_fallbacks;
        d.halvings += halvings;
        d.max_courant = d.max_courant.max(courant);
        self.state.cells = cells;
        self.state.t = new_t;
        self.state.step += 1;
        Ok(report)
    }

    /// Advances to `t_end`, calling `observer` after every step and at every
    /// cadence and snapshot time (including `t = 0`).
    pub fn run(&mut self, observer: &mut dyn Observer) -> Result<(), SolverError> {
        let t_end = self.config.t_end;
        let interval = self.config.output_interval;
        let mut snapshots: Vec<f64> =
            self.config.snapshot_times.iter().copied().filter(|&s| s >= self.state.t && s <= t_end).collect();
        snapshots.sort_by(f64::total_cmp);
        snapshots.dedup();
        let mut next_snapshot = 0;
        let mut next_cadence = 0u64;
        let cadence_time = |k: u64| interval.map(|dt| k as f64 * dt).filter(|&s| s <= t_end);
        loop {
            let t = self.state.t;
            if let Some(ct) = cadence_time(next_cadence) {
                if ct <= t {
                    observer.on_record(self, RecordKind::Cadence);
                    next_cadence += 1;
                    while cadence_time(next_cadence).is_some_and(|s| s <= t) {
                        next_cadence += 1;
                    }
                }
            }
            while next_snapshot < snapshots.len() && snapshots[next_snapshot] <= t {
                observer.on_record(self, RecordKind::Snapshot);
                next_snapshot += 1;
            }
            if t >= t_end {
                return Ok(());
            }
            let mut target = t_end;
            if let Some(ct) = cadence_time(next_cadence) {
                target = target.min(ct);
            }
            if let Some(&s) = snapshots.get(next_snapshot) {
                target = target.min(s);
            }
            let report = self.step_until(target)?;
            observer.on_step(self, &report);
        }
    }
}
