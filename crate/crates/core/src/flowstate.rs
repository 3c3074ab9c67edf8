//! Pointwise physics of the unified free-surface / pressurized model.
//!
//! A cell carries the FS-equivalent wet area `A`, the discharge `Q` and the
//! regime indicator `E`. In pressurized cells `A = (rho / rho0) S` encodes
//! the compression of water, so `A < S` with `E = 1` is a depression.

use thiserror::Error;

use crate::geometry::{CellGeometry, GeometryError, WetSection};

/// Smallest wet area accepted anywhere in the model. Dry cells are not
/// supported.
pub const MIN_AREA: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("wet area {0:e} is not positive (dry cells are not supported)")]
    NonPositiveArea(f64),
    #[error("free-surface celerity undefined for zero surface width")]
    DegenerateSection,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Regime indicator `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Regime {
    #[default]
    FreeSurface,
    Pressurized,
}

impl Regime {
    /// `E` as the integer 0 / 1.
    pub fn indicator(self) -> u8 {
        match self {
            Regime::FreeSurface => 0,
            Regime::Pressurized => 1,
        }
    }

    pub fn from_indicator(e: u8) -> Option<Self> {
        match e {
            0 => Some(Regime::FreeSurface),
            1 => Some(Regime::Pressurized),
            _ => None,
        }
    }

    pub fn is_pressurized(self) -> bool {
        self == Regime::Pressurized
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub area: f64,
    pub discharge: f64,
    pub regime: Regime,
}

impl CellState {
    pub fn new(area: f64, discharge: f64, regime: Regime) -> Self {
        Self { area, discharge, regime }
    }

    pub fn velocity(&self) -> f64 {
        self.discharge / self.area
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub gravity: f64,
    /// Sonic speed `c` of pressure waves in the full pipe.
    pub sonic_speed: f64,
    /// Strickler coefficient `Ks`.
    pub strickler: f64,
}

impl PhysicalConstants {
    pub fn new(gravity: f64, sonic_speed: f64, strickler: f64) -> Self {
        Self { gravity, sonic_speed, strickler }
    }

    /// Sonic speed from the water compressibility, `c = 1 / sqrt(beta rho0)`.
    pub fn from_compressibility(gravity: f64, beta: f64, rho0: f64, strickler: f64) -> Self {
        Self::new(gravity, 1.0 / (beta * rho0).sqrt(), strickler)
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut bad = Vec::new();
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            bad.push(format!("gravity must be positive, got {}", self.gravity));
        }
        if !(self.sonic_speed > 0.0 && self.sonic_speed.is_finite()) {
            bad.push(format!("sonic speed must be positive, got {}", self.sonic_speed));
        }
        if !(self.strickler > 0.0) {
            bad.push(format!("Strickler coefficient must be positive, got {}", self.strickler));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad.join("; "))
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::new(9.81, 1400.0, 1.0 / 0.012)
    }
}

fn check_area(area: f64) -> Result<(), FlowError> {
    if area > MIN_AREA && area.is_finite() {
        Ok(())
    } else {
        Err(FlowError::NonPositiveArea(area))
    }
}

/// Physical wet area: `S` when pressurized, `A` otherwise.
pub fn physical_wet_area(area: f64, regime: Regime, section: f64) -> f64 {
    match regime {
        Regime::Pressurized => section,
        Regime::FreeSurface => area,
    }
}

/// Physical wet area used by the constitutive laws. A free-surface state
/// holding more than the full section (possible between a cell update and
/// the regime update) is continued along the pressurized branch, which keeps
/// pressure, head and entropy continuous in `A`.
pub fn effective_wet_area(area: f64, regime: Regime, section: f64) -> f64 {
    match regime {
        Regime::Pressurized => section,
        Regime::FreeSurface => area.min(section),
    }
}

fn wet(geom: &CellGeometry, area: f64, regime: Regime) -> Result<WetSection, FlowError> {
    check_area(area)?;
    Ok(geom.cross_section().wet(effective_wet_area(area, regime, geom.section))?)
}

/// Level `H(S_phys)` of the physical free surface: the water level below the
/// crown, `R` once the pipe runs full.
pub fn physical_level(geom: &CellGeometry, area: f64, regime: Regime) -> Result<f64, FlowError> {
    check_area(area)?;
    if regime.is_pressurized() || area >= geom.section {
        Ok(geom.radius)
    } else {
        Ok(geom.cross_section().level_from_wet_area(area)?)
    }
}

/// Pressure term of the momentum flux, `c^2 (A - S_phys) + g I1(S_phys) cos(theta)`.
pub fn pressure(
    geom: &CellGeometry,
    area: f64,
    regime: Regime,
    consts: &PhysicalConstants,
) -> Result<f64, FlowError> {
    let w = wet(geom, area, regime)?;
    let c2 = consts.sonic_speed * consts.sonic_speed;
    let phys = w.area();
    Ok(c2 * (area - phys) + consts.gravity * w.hydrostatic_integral() * geom.cos_theta)
}

/// Momentum flux `Q^2 / A + p`.
pub fn momentum_flux(
    geom: &CellGeometry,
    area: f64,
    discharge: f64,
    regime: Regime,
    consts: &PhysicalConstants,
) -> Result<f64, FlowError> {
    Ok(discharge * discharge / area + pressure(geom, area, regime, consts)?)
}

/// Celerity from an explicit surface width.
pub fn celerity_from_width(
    area: f64,
    regime: Regime,
    width: f64,
    cos_theta: f64,
    consts: &PhysicalConstants,
) -> Result<f64, FlowError> {
    check_area(area)?;
    match regime {
        Regime::Pressurized => Ok(consts.sonic_speed),
        Regime::FreeSurface if width > 0.0 => Ok((consts.gravity * area * cos_theta / width).sqrt()),
        Regime::FreeSurface => Err(FlowError::DegenerateSection),
    }
}

/// Celerity `c(A, E)` in a cell. Free-surface gravity waves never exceed the
/// sonic speed: as the pipe fills the surface width vanishes and the
/// celerity is capped at `c`.
pub fn celerity(
    geom: &CellGeometry,
    area: f64,
    regime: Regime,
    consts: &PhysicalConstants,
) -> Result<f64, FlowError> {
    check_area(area)?;
    if regime.is_pressurized() || area >= geom.section {
        return Ok(consts.sonic_speed);
    }
    let width = geom.cross_section().wet(area)?.surface_width();
    let gravity_wave = (consts.gravity * area * geom.cos_theta / width).sqrt();
    Ok(if gravity_wave.is_finite() { gravity_wave.min(consts.sonic_speed) } else { consts.sonic_speed })
}

/// `(u - c, u + c)`.
pub fn eigenvalues(velocity: f64, celerity: f64) -> (f64, f64) {
    (velocity - celerity, velocity + celerity)
}

/// Total head `u^2/2 + c^2 ln(A/S_phys) + g H(S_phys) cos(theta) + g b`.
pub fn total_head(geom: &CellGeometry, state: &CellState, consts: &PhysicalConstants) -> Result<f64, FlowError> {
    head_at(geom, state.area, state.discharge, state.regime, consts)
}

pub(crate) fn head_at(
    geom: &CellGeometry,
    area: f64,
    discharge: f64,
    regime: Regime,
    consts: &PhysicalConstants,
) -> Result<f64, FlowError> {
    Ok(specific_head(geom, area, discharge, regime, consts)? + consts.gravity * geom.elevation)
}

/// Total head without the elevation term `g b`.
pub(crate) fn specific_head(
    geom: &CellGeometry,
    area: f64,
    discharge: f64,
    regime: Regime,
    consts: &PhysicalConstants,
) -> Result<f64, FlowError> {
    check_area(area)?;
    let u = discharge / area;
    let phys = effective_wet_area(area, regime, geom.section);
    let level = physical_level(geom, area, regime)?;
    let c2 = consts.sonic_speed * consts.sonic_speed;
    Ok(0.5 * u * u + c2 * (area / phys).ln() + consts.gravity * level * geom.cos_theta)
}

/// Mathematical entropy
/// `Q^2/2A + c^2 A ln(A/S_phys) + c^2 S + g A Zbar(S_phys) cos(theta) + g A b`.
pub fn entropy(geom: &CellGeometry, state: &CellState, consts: &PhysicalConstants) -> Result<f64, FlowError> {
    let a = state.area;
    let w = wet(geom, a, state.regime)?;
    let c2 = consts.sonic_speed * consts.sonic_speed;
    let g = consts.gravity;
    Ok(state.discharge * state.discharge / (2.0 * a)
        + c2 * a * (a / w.area()).ln()
        + c2 * geom.section
        + g * a * (w.centroid() * geom.cos_theta + geom.elevation))
}

/// Manning-Strickler coefficient `K = 1 / (Ks^2 R_h(S_phys)^{4/3})`.
pub fn friction_coefficient(
    geom: &CellGeometry,
    area: f64,
    regime: Regime,
    consts: &PhysicalConstants,
) -> Result<f64, FlowError> {
    let rh = wet(geom, area, regime)?.hydraulic_radius();
    Ok(1.0 / (consts.strickler * consts.strickler * rh.powf(4.0 / 3.0)))
}

/// Friction term `K Q |Q| / A`.
pub fn friction_slope(geom: &CellGeometry, state: &CellState, consts: &PhysicalConstants) -> Result<f64, FlowError> {
    if state.discharge == 0.0 {
        return Ok(0.0);
    }
    let k = friction_coefficient(geom, state.area, state.regime, consts)?;
    Ok(k * state.discharge * state.discharge.abs() / state.area)
}

/// Piezometric head: the free-surface elevation `b + h` in free-surface
/// cells, and the crown plus the pressure head `b + R + c^2 (A - S) / (g S)`
/// in pressurized cells. The two branches meet at `A = S`.
pub fn piezometric_head(geom: &CellGeometry, state: &CellState, consts: &PhysicalConstants) -> Result<f64, FlowError> {
    check_area(state.area)?;
    let s = geom.section;
    if state.regime.is_pressurized() || state.area >= s {
        let c2 = consts.sonic_speed * consts.sonic_speed;
        Ok(geom.elevation + geom.radius + c2 * (state.area - s) / (consts.gravity * s))
    } else {
        Ok(geom.elevation + geom.cross_section().level_from_wet_area(state.area)?)
    }
}

/// Depression indicator `A / S_phys`: below one only in depressed pressurized
/// cells.
pub fn depression_ratio(geom: &CellGeometry, state: &CellState) -> f64 {
    state.area / physical_wet_area(state.area, state.regime, geom.section)
}
