//! Unified free-surface / pressurized flow in closed circular pipes of
//! varying section, slope and elevation.
//!
//! The model evolves the FS-equivalent wet area `A` and discharge `Q` with a
//! regime indicator `E` per cell. Free-surface cells follow the shallow-water
//! equations; pressurized cells follow a weakly compressible water-hammer
//! law with sonic speed `c`. The finite-volume scheme is a VFRoe-type
//! linearized Riemann solver in which geometry and friction are upwinded as
//! stationary waves, with dedicated solvers at transition points and an
//! optional exactly well-balanced choice of the linearization state.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod flowstate;
pub mod geometry;
pub mod newton;
pub mod riemann;
pub mod solver;
pub mod wellbalance;

pub use flowstate::{CellState, FlowError, PhysicalConstants, Regime};
pub use geometry::{CellGeometry, CircularSection, GeometryError, PipeGeometry};
pub use riemann::{Fallback, InterfaceInput, InterfaceSolution, RiemannError, TransitionInfo, TransitionKind};
pub use solver::{
    Anchor, Boundary, Diagnostics, Hydrograph, Observer, RecordKind, Simulation, SimulationConfig, SimulationState,
    SolverError, StepReport,
};
pub use wellbalance::{AtildeStrategy, WellBalanceError};
