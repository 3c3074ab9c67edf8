//! Discrete still-water steady states: `Q = 0` and a common total head.

use crate::flowstate::{CellState, PhysicalConstants, Regime};
use crate::geometry::PipeGeometry;
use crate::wellbalance::{area_for_head, still_head, WellBalanceError};

use super::boundary::state_for_piezometric_head;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// Wet area of one cell.
    Area { cell: usize, area: f64 },
    /// Piezometric head (m) in one cell.
    Piezometric { cell: usize, head: f64 },
    /// Total head (m^2/s^2).
    TotalHead(f64),
}

/// Total head of the still-water state fixed by `anchor`.
pub fn anchor_head(
    geometry: &PipeGeometry,
    layout: &[Regime],
    anchor: Anchor,
    consts: &PhysicalConstants,
) -> Result<f64, WellBalanceError> {
    let cells = geometry.cells();
    let head = match anchor {
        Anchor::TotalHead(h) => h,
        Anchor::Area { cell, area } => still_head(&cells[cell], area, layout[cell], consts)?,
        Anchor::Piezometric { cell, head } => {
            let (area, regime) = state_for_piezometric_head(&cells[cell], head, consts);
            still_head(&cells[cell], area, regime, consts)?
        }
    };
    Ok(head)
}

/// Regimes of the still-water state of total head `head`: pressurized where
/// a free surface would rise above the crown.
pub fn regimes_for_head(geometry: &PipeGeometry, head: f64, consts: &PhysicalConstants) -> Vec<Regime> {
    geometry
        .cells()
        .iter()
        .map(|c| {
            let level = (head / consts.gravity - c.elevation) / c.cos_theta;
            if level >= c.radius {
                Regime::Pressurized
            } else {
                Regime::FreeSurface
            }
        })
        .collect()
}

/// Still-water state with the regimes of `layout`, anchored by `anchor`.
/// Errors name the first cell that cannot hold the common head.
pub fn build_steady_state(
    geometry: &PipeGeometry,
    layout: &[Regime],
    anchor: Anchor,
    consts: &PhysicalConstants,
) -> Result<Vec<CellState>, WellBalanceError> {
    assert_eq!(layout.len(), geometry.len(), "one regime per cell");
    let head = anchor_head(geometry, layout, anchor, consts)?;
    geometry
        .cells()
        .iter()
        .zip(layout)
        .enumerate()
        .map(|(i, (g, &e))| Ok(CellState::new(area_for_head(g, head, e, consts, i)?, 0.0, e)))
        .collect()
}
