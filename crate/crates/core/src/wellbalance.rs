//! Choice of the linearization wet area `A~` at each interface.
//!
//! The classical choice is the arithmetic mean. The exact choice makes the
//! still-water traces of every cell match, `AM_{i+1/2} = AP_{i-1/2}` and
//! `QMP_{i+1/2} = QMP_{i-1/2}`, which leaves discrete still-water states
//! untouched by the scheme.

use log::debug;
use thiserror::Error;

use crate::flowstate::{specific_head, CellState, FlowError, PhysicalConstants, Regime, MIN_AREA};
use crate::geometry::CellGeometry;
use crate::newton::{self, NewtonOptions};
use crate::riemann::{linearize, upwinded_source, InterfaceInput};

/// An exact `A~` further than this factor from both neighbours is refused.
const BRACKET_FACTOR: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WellBalanceError {
    #[error("steady state needs free-surface level {level} in cell {cell}, outside [-{radius}, {radius}]")]
    Infeasible { cell: usize, level: f64, radius: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AtildeStrategy {
    #[default]
    Classical,
    Exact { tolerance: f64, max_iterations: usize },
}

impl AtildeStrategy {
    pub fn exact() -> Self {
        AtildeStrategy::Exact { tolerance: 1e-12, max_iterations: 50 }
    }
}

/// `(A_l + A_r) / 2`.
pub fn atilde_classical(a_left: f64, a_right: f64) -> f64 {
    0.5 * (a_left + a_right)
}

/// Still-water imbalance of one interface at a trial `A~`, split as
/// `(dA, g A~ psi / c~, c~)`. The interface balances when
/// `dA + g A~ psi / c~^2 = 0`.
fn imbalance(input: &InterfaceInput, atilde: f64) -> Option<(f64, f64, f64)> {
    if !(atilde > MIN_AREA) {
        return None;
    }
    let q = 0.5 * (input.left.discharge + input.right.discharge);
    let lin = linearize(input.left_geom, input.right_geom, atilde, q, input.left.regime, input.consts).ok()?;
    let psi = upwinded_source(input, &lin).ok()?;
    let c = lin.celerity;
    Some((input.right.area - input.left.area, input.consts.gravity * atilde * psi / c, c))
}

/// Solves the 2x2 system of cell `i` for `(A~_{i-1/2}, A~_{i+1/2})`. Either
/// interface may be absent (a transition, whose `A~` is not used), in which
/// case only the other one is solved. Without an acceptable root the
/// classical means are returned and `balanced` is false.
pub fn atilde_exact_pair(
    minus: Option<&InterfaceInput>,
    plus: Option<&InterfaceInput>,
    tolerance: f64,
    max_iterations: usize,
) -> ExactPair {
    let start: Vec<f64> = [minus, plus]
        .iter()
        .flatten()
        .map(|i| atilde_classical(i.left.area, i.right.area))
        .collect();
    if start.is_empty() {
        return ExactPair { minus: None, plus: None, balanced: true };
    }
    let residual = |x: &[f64]| -> Option<Vec<f64>> {
        match (minus, plus) {
            (Some(m), Some(p)) => {
                let (dm, sm, cm) = imbalance(m, x[0])?;
                let (dp, sp, cp) = imbalance(p, x[1])?;
                // AM_{i+1/2} - AP_{i-1/2}
                let r1 = [dm, dp, sm / cm, sp / cp];
                // QMP_{i-1/2} - QMP_{i+1/2}
                let r2 = [sm, -sp, cm * dm, -cp * dp];
                Some(vec![ratio(&r1), ratio(&r2)])
            }
            (Some(one), None) | (None, Some(one)) => {
                let (d, s, c) = imbalance(one, x[0])?;
                Some(vec![ratio(&[d, s / c])])
            }
            (None, None) => None,
        }
    };
    let scale = start.clone();
    let opts = NewtonOptions { max_iterations, tolerance: 1e-15, ..NewtonOptions::default() };
    let out = newton::solve(residual, &start, &scale, &opts);
    // near an extremum of the still-water area dA vanishes and the root
    // drifts well away from both neighbours; only far roots are refused
    let ok = out.residual <= tolerance
        && out.x.iter().zip([minus, plus].into_iter().flatten()).all(|(a, i)| {
            let (lo, hi) = (i.left.area.min(i.right.area), i.left.area.max(i.right.area));
            *a >= BRACKET_FACTOR.recip() * lo && *a <= BRACKET_FACTOR * hi
        });
    let values: Vec<Option<f64>> =
        out.x.iter().zip(&start).map(|(a, s)| if ok { Some(*a) } else { Some(*s) }).collect();
    if !ok {
        debug!("exact A~ rejected (residual {:e}); using the classical mean", out.residual);
    }
    let (minus, plus) = match (minus, plus) {
        (Some(_), Some(_)) => (values[0], values[1]),
        (Some(_), None) => (values[0], None),
        _ => (None, values[0]),
    };
    ExactPair { minus, plus, balanced: ok }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactPair {
    /// `A~_{i-1/2}`.
    pub minus: Option<f64>,
    /// `A~_{i+1/2}`.
    pub plus: Option<f64>,
    pub balanced: bool,
}

fn ratio(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let mag: f64 = terms.iter().map(|t| t.abs()).sum();
    if mag > 0.0 {
        sum / mag
    } else {
        0.0
    }
}

/// `A~` of every interface between consecutive `cells`, under `strategy`.
/// Returns the values and the number of cells whose exact system fell back
/// to the classical mean.
pub fn atilde_field(
    strategy: AtildeStrategy,
    geoms: &[CellGeometry],
    cells: &[CellState],
    consts: &PhysicalConstants,
    friction: bool,
) -> (Vec<f64>, usize) {
    let n = cells.len();
    let classical: Vec<f64> = cells.windows(2).map(|w| atilde_classical(w[0].area, w[1].area)).collect();
    let AtildeStrategy::Exact { tolerance, max_iterations } = strategy else {
        return (classical, 0);
    };
    // transitions do not use A~; without a source the traces do not depend
    // on it either, so neither kind enters the cell systems
    let input = |j: usize| -> Option<InterfaceInput> {
        let input = InterfaceInput {
            left_geom: &geoms[j],
            right_geom: &geoms[j + 1],
            left: cells[j],
            right: cells[j + 1],
            atilde: classical[j],
            consts,
            friction,
        };
        let (_, source, _) = imbalance(&input, classical[j])?;
        (cells[j].regime == cells[j + 1].regime && source != 0.0).then_some(input)
    };
    let mut sum = vec![0.0; n - 1];
    let mut count = vec![0u32; n - 1];
    let mut fallbacks = 0;
    for i in 1..n - 1 {
        let minus = input(i - 1);
        let plus = input(i);
        let pair = atilde_exact_pair(minus.as_ref(), plus.as_ref(), tolerance, max_iterations);
        if !pair.balanced {
            fallbacks += 1;
        }
        for (j, v) in [(i - 1, pair.minus), (i, pair.plus)] {
            if let Some(v) = v {
                sum[j] += v;
                count[j] += 1;
            }
        }
    }
    let values = (0..n - 1)
        .map(|j| match count[j] {
            0 => classical[j],
            1 => sum[j],
            k => sum[j] / k as f64,
        })
        .collect();
    (values, fallbacks)
}

/// Wet area holding the still-water total head `head` in a cell of the given
/// regime.
pub fn area_for_head(
    geom: &CellGeometry,
    head: f64,
    regime: Regime,
    consts: &PhysicalConstants,
    cell: usize,
) -> Result<f64, WellBalanceError> {
    let g = consts.gravity;
    let c = consts.sonic_speed;
    let local = head - g * geom.elevation;
    match regime {
        Regime::Pressurized => Ok(geom.section * ((local - g * geom.radius * geom.cos_theta) / (c * c)).exp()),
        Regime::FreeSurface => {
            let level = local / (g * geom.cos_theta);
            if !(level > -geom.radius && level <= geom.radius) {
                return Err(WellBalanceError::Infeasible { cell, level, radius: geom.radius });
            }
            let area = geom.cross_section().wet_area_from_level(level).map_err(FlowError::from)?;
            if !(area > MIN_AREA) {
                return Err(WellBalanceError::Infeasible { cell, level, radius: geom.radius });
            }
            Ok(area)
        }
    }
}

/// Still-water total head of a cell (`Q = 0`).
pub fn still_head(geom: &CellGeometry, area: f64, regime: Regime, consts: &PhysicalConstants) -> Result<f64, FlowError> {
    Ok(specific_head(geom, area, 0.0, regime, consts)? + consts.gravity * geom.elevation)
}

/// Wet area of cell `i + 1` in still-water equilibrium with cell `i`.
pub fn steady_state_next_area(
    geom_i: &CellGeometry,
    area_i: f64,
    regime_i: Regime,
    geom_next: &CellGeometry,
    regime_next: Regime,
    consts: &PhysicalConstants,
) -> Result<f64, WellBalanceError> {
    let head = still_head(geom_i, area_i, regime_i, consts)?;
    area_for_head(geom_next, head, regime_next, consts, 1)
}
