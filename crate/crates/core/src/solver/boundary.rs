//! Boundary hydrographs and ghost cells.
//!
//! A ghost cell copies the geometry of its interior neighbour. A prescribed
//! discharge reflects the interior state about the target discharge; a
//! prescribed piezometric head fixes the ghost wet area and takes the
//! velocity from the Riemann invariant of the outgoing characteristic.

use std::f64::consts::TAU;

use crate::flowstate::{CellState, FlowError, PhysicalConstants, Regime, MIN_AREA};
use crate::geometry::CellGeometry;

/// Piecewise-linear time series, held constant outside its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Hydrograph {
    samples: Vec<(f64, f64)>,
}

impl Hydrograph {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, String> {
        if samples.is_empty() {
            return Err("hydrograph needs at least one sample".into());
        }
        if let Some(bad) = samples.iter().find(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(format!("non-finite hydrograph sample ({}, {})", bad.0, bad.1));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(format!("hydrograph times not strictly increasing at t = {}", w[1].0));
            }
        }
        Ok(Self { samples })
    }

    pub fn constant(value: f64) -> Self {
        Self { samples: vec![(0.0, value)] }
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Value at `t`, and whether `t` fell outside the sampled range.
    pub fn value(&self, t: f64) -> (f64, bool) {
        let first = self.samples[0];
        let last = self.samples[self.samples.len() - 1];
        let outside = self.samples.len() > 1 && (t < first.0 || t > last.0);
        if t <= first.0 {
            return (first.1, outside);
        }
        if t >= last.0 {
            return (last.1, outside);
        }
        let k = self.samples.partition_point(|&(s, _)| s <= t);
        let (t0, v0) = self.samples[k - 1];
        let (t1, v1) = self.samples[k];
        (v0 + (v1 - v0) * (t - t0) / (t1 - t0), false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    /// Piezometric head (m).
    Head(Hydrograph),
    /// Discharge (m^3/s), positive along the pipe axis.
    Discharge(Hydrograph),
}

impl Boundary {
    pub fn closed() -> Self {
        Boundary::Discharge(Hydrograph::constant(0.0))
    }

    pub fn hydrograph(&self) -> &Hydrograph {
        match self {
            Boundary::Head(h) | Boundary::Discharge(h) => h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Upstream,
    Downstream,
}

/// Wet area and regime of a cell whose piezometric head is `head`.
pub fn state_for_piezometric_head(geom: &CellGeometry, head: f64, consts: &PhysicalConstants) -> (f64, Regime) {
    let crown = geom.elevation + geom.radius;
    if head >= crown {
        let c2 = consts.sonic_speed * consts.sonic_speed;
        (geom.section * (1.0 + consts.gravity * (head - crown) / c2), Regime::Pressurized)
    } else {
        let r = geom.radius;
        let level = (head - geom.elevation).clamp(-r * (1.0 - 1e-6), r);
        let area = geom.cross_section().wet_area_from_level(level).unwrap_or(MIN_AREA).max(2.0 * MIN_AREA);
        (area, Regime::FreeSurface)
    }
}

/// Angle of the wetted arc mapped from `t` in `[0, 1]`; the map flattens at
/// the crown so that the `1/sqrt(T)` singularity of the integrand cancels.
fn omega_of(t: f64) -> (f64, f64) {
    let s = 1.0 - t;
    (TAU * (1.0 - s * s), 2.0 * TAU * s)
}

fn t_of(omega: f64) -> f64 {
    1.0 - (1.0 - omega / TAU).max(0.0).sqrt()
}

/// `int_{A_a}^{A_b} c(A) / A dA` along the free-surface branch.
fn free_surface_invariant_gap(geom: &CellGeometry, a_from: f64, a_to: f64, consts: &PhysicalConstants) -> f64 {
    let r = geom.radius;
    let section = geom.cross_section();
    let omega = |a: f64| section.wet(a.min(geom.section)).map(|w| w.omega()).unwrap_or(TAU);
    let (t0, t1) = (t_of(omega(a_from)), t_of(omega(a_to)));
    let integrand = |t: f64| {
        let (w, dw) = omega_of(t);
        let a = 0.5 * r * r * (w - w.sin());
        let width = 2.0 * r * (0.5 * w).sin();
        let da = 0.5 * r * r * (1.0 - w.cos()) * dw;
        if a <= 0.0 || width <= 0.0 {
            // finite limits at both ends of the map
            return if t < 0.5 { (3.0 * consts.gravity * geom.cos_theta * r).sqrt() * TAU } else { 0.0 };
        }
        (consts.gravity * geom.cos_theta / (a * width)).sqrt() * da
    };
    // composite Simpson
    let n = 256;
    let h = (t1 - t0) / n as f64;
    let mut sum = integrand(t0) + integrand(t1);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(t0 + k as f64 * h);
    }
    sum * h / 3.0
}

/// `phi(A_b, E_b) - phi(A_a, E_a)` with `d(phi) = c(A, E) / A dA`.
fn invariant_gap(
    geom: &CellGeometry,
    from: (f64, Regime),
    to: (f64, Regime),
    consts: &PhysicalConstants,
) -> f64 {
    let s = geom.section;
    let c = consts.sonic_speed;
    // split each end into its free-surface and pressurized parts
    let split = |(a, e): (f64, Regime)| -> (f64, f64) {
        if e.is_pressurized() || a >= s {
            (s, c * (a / s).ln())
        } else {
            (a, 0.0)
        }
    };
    let (fa, pa) = split(from);
    let (fb, pb) = split(to);
    free_surface_invariant_gap(geom, fa, fb, consts) + pb - pa
}

/// Ghost state beyond `end` for the boundary condition evaluated at `t`.
/// Also returns whether `t` fell outside the hydrograph range.
pub fn ghost_cell(
    boundary: &Boundary,
    end: End,
    geom: &CellGeometry,
    interior: &CellState,
    t: f64,
    consts: &PhysicalConstants,
) -> Result<(CellState, bool), FlowError> {
    let (value, clamped) = boundary.hydrograph().value(t);
    let ghost = match boundary {
        Boundary::Discharge(_) => CellState::new(interior.area, 2.0 * value - interior.discharge, interior.regime),
        Boundary::Head(_) => {
            let (area, regime) = state_for_piezometric_head(geom, value, consts);
            let gap = invariant_gap(geom, (interior.area, interior.regime), (area, regime), consts);
            let u = match end {
                // u - phi is carried out of the domain through the upstream end
                End::Upstream => interior.velocity() + gap,
                End::Downstream => interior.velocity() - gap,
            };
            CellState::new(area, u * area, regime)
        }
    };
    if !(ghost.area > MIN_AREA && ghost.discharge.is_finite()) {
        return Err(FlowError::NonPositiveArea(ghost.area));
    }
    Ok((ghost, clamped))
}
