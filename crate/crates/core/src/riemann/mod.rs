//! Linearized interface Riemann solvers.
//!
//! The extended state `W = (b, cos(theta), S, A, Q)` carries the pipe
//! geometry as conservative-looking unknowns, so geometric jumps become
//! stationary waves of the convection matrix `D(W)`. An interface solve
//! returns the left and right traces of the wet area and a single interface
//! discharge shared by both neighbours.

mod linear;
mod transition;

pub use linear::{
    convection_matrix, linearize, solve_nontransition, traces_from_fan, upwinded_source, Linearization, WaveFan,
};
pub use transition::{
    predict_interface_speed, solve_transition, solve_transition_freesurface_downstream,
    solve_transition_pressure_downstream, solve_transition_stationary, solve_transition_upstream,
};

use thiserror::Error;

use crate::flowstate::{CellState, FlowError, PhysicalConstants, Regime};
use crate::geometry::CellGeometry;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiemannError {
    #[error("resonant interface: |u| = {velocity} coincides with celerity {celerity}")]
    Resonance { velocity: f64, celerity: f64 },
    #[error("transition with equal wet areas on both sides ({area}); interface speed undefined")]
    DegenerateJump { area: f64 },
    #[error("{kind:?} transition solver did not converge (residual {residual:e} after {iterations} iterations)")]
    TransitionFailure { kind: TransitionKind, residual: f64, iterations: usize },
    #[error("{kind:?} front speed {speed} violates the admissibility bounds")]
    InadmissibleFront { kind: TransitionKind, speed: f64 },
    #[error("{0}")]
    WrongCase(&'static str),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Data for one interface between a left and a right cell.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceInput<'a> {
    pub left_geom: &'a CellGeometry,
    pub right_geom: &'a CellGeometry,
    pub left: CellState,
    pub right: CellState,
    /// Linearization wet area for a non-transition interface.
    pub atilde: f64,
    pub consts: &'a PhysicalConstants,
    pub friction: bool,
}

impl<'a> InterfaceInput<'a> {
    /// The reflection `(X, Q) -> (-X, -Q)`.
    pub fn mirrored(&self) -> InterfaceInput<'a> {
        let flip = |s: CellState| CellState::new(s.area, -s.discharge, s.regime);
        InterfaceInput {
            left_geom: self.right_geom,
            right_geom: self.left_geom,
            left: flip(self.right),
            right: flip(self.left),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionKind {
    /// Pressurized zone on the left advancing into free surface.
    PressureDownstream,
    /// Pressurized zone on the right advancing into free surface.
    PressureUpstream,
    /// Free-surface zone on the left advancing into the pressurized one.
    FreeSurfaceDownstream,
    /// Free-surface zone on the right advancing into the pressurized one.
    FreeSurfaceUpstream,
    /// Transition point at rest on the interface.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionInfo {
    pub kind: TransitionKind,
    /// Speed `w` of the transition point.
    pub speed: f64,
    /// Max-norm of the scaled residual of the nonlinear system.
    pub residual: f64,
    /// Relative disagreement of the two Rankine-Hugoniot speeds.
    pub rh_mismatch: f64,
    pub admissible: bool,
    pub iterations: usize,
    /// Set when the front was rejected and the interface was treated as a
    /// non-transition one.
    pub fallback: Option<Fallback>,
}

/// Why a transition front was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fallback {
    NoConvergence,
    /// The root violates the admissibility bounds of its case.
    Inadmissible,
    /// The linearized fan over the front yields a dry trace.
    DryTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceSolution {
    /// Left trace `AM` of the wet area.
    pub am: f64,
    /// Right trace `AP` of the wet area.
    pub ap: f64,
    /// Interface discharge `QM = QP`.
    pub qmp: f64,
    /// Regime of the left trace.
    pub left_regime: Regime,
    /// Regime of the right trace.
    pub right_regime: Regime,
    pub transition: Option<TransitionInfo>,
}

impl InterfaceSolution {
    /// Reflects a solution of the mirrored problem back.
    pub fn mirrored(&self) -> InterfaceSolution {
        InterfaceSolution {
            am: self.ap,
            ap: self.am,
            qmp: -self.qmp,
            left_regime: self.right_regime,
            right_regime: self.left_regime,
            transition: self.transition.map(|t| TransitionInfo { speed: -t.speed, ..t }),
        }
    }
}

/// Solves one interface, dispatching on the regimes of both cells.
pub fn solve_interface(input: &InterfaceInput) -> Result<InterfaceSolution, RiemannError> {
    if input.left.regime == input.right.regime {
        solve_nontransition(input, input.left.regime)
    } else {
        solve_transition(input)
    }
}
