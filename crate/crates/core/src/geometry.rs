//! Circular cross-section geometry and the discretized pipe.
//!
//! Water levels are measured from the pipe axis, so a level `h` lies in
//! `[-R, R]`: `-R` is the invert (empty pipe) and `R` the crown (full pipe).
//! Every wet quantity is parametrized by the angle `omega` subtended by the
//! wetted arc, with `A = R^2/2 (omega - sin omega)`.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("water level {level} outside [-{radius}, {radius}]")]
    LevelOutOfRange { level: f64, radius: f64 },
    #[error("wet area {area} outside (0, {full}]")]
    AreaOutOfRange { area: f64, full: f64 },
    #[error("invalid pipe geometry: {0}")]
    InvalidPipe(String),
}

/// Relative slack accepted above the full section before an area is rejected.
const FULL_SLACK: f64 = 1e-12;

/// Below this angle `omega - sin(omega)` and `I1` switch to Taylor series.
const SERIES_OMEGA: f64 = 0.1;

/// `omega - sin(omega)`, accurate for small angles.
fn omega_minus_sin(omega: f64) -> f64 {
    if omega < SERIES_OMEGA {
        let s2 = omega * omega;
        // s^3/6 - s^5/120 + s^7/5040 - s^9/362880 + s^11/39916800
        omega
            * s2
            * (1.0 / 6.0
                + s2 * (-1.0 / 120.0
                    + s2 * (1.0 / 5040.0 + s2 * (-1.0 / 362_880.0 + s2 / 39_916_800.0))))
    } else {
        omega - omega.sin()
    }
}

/// A circular cross-section of radius `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularSection {
    radius: f64,
}

impl CircularSection {
    pub fn new(radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidPipe(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Full cross-section area `S = pi R^2`.
    pub fn full_area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Wet area below the level `h` (measured from the axis).
    pub fn wet_area_from_level(&self, level: f64) -> Result<f64, GeometryError> {
        let r = self.radius;
        if !(level >= -r && level <= r) {
            return Err(GeometryError::LevelOutOfRange { level, radius: r });
        }
        let x = (level / r).clamp(-1.0, 1.0);
        if level <= 0.0 {
            // omega = 2 (pi - arccos(h/R)) = 2 arccos(-h/R)
            let omega = 2.0 * (-x).acos();
            Ok(0.5 * r * r * omega_minus_sin(omega))
        } else {
            // Complementary dry segment, accurate near the crown.
            let dry = 2.0 * x.acos();
            Ok(self.full_area() - 0.5 * r * r * omega_minus_sin(dry))
        }
    }

    /// Wetted state for a wet area `A` in `(0, S]`.
    pub fn wet(&self, area: f64) -> Result<WetSection, GeometryError> {
        let full = self.full_area();
        if !(area > 0.0 && area <= full * (1.0 + FULL_SLACK)) {
            return Err(GeometryError::AreaOutOfRange { area, full });
        }
        let area = area.min(full);
        let r2 = self.radius * self.radius;
        // Solve on whichever of the wet / dry segments is the smaller one so
        // that the width stays accurate near both the invert and the crown.
        let (omega, dry) = if area <= 0.5 * full {
            let w = solve_segment_angle(2.0 * area / r2);
            (w, TAU - w)
        } else {
            let d = solve_segment_angle(2.0 * (full - area) / r2);
            (TAU - d, d)
        };
        Ok(WetSection { radius: self.radius, area, omega, dry_omega: dry })
    }

    /// Level `h` of the free surface holding the wet area `A`.
    pub fn level_from_wet_area(&self, area: f64) -> Result<f64, GeometryError> {
        Ok(self.wet(area)?.level())
    }

    /// Free-surface width `T(A)`.
    pub fn surface_width(&self, area: f64) -> Result<f64, GeometryError> {
        Ok(self.wet(area)?.surface_width())
    }

    /// Hydrostatic pressure integral `I1 = int_{-R}^{h} (h - Z) sigma dZ`.
    pub fn hydrostatic_integral(&self, area: f64) -> Result<f64, GeometryError> {
        Ok(self.wet(area)?.hydrostatic_integral())
    }

    /// Height of the wet-area centroid above the axis.
    pub fn center_of_mass_depth(&self, area: f64) -> Result<f64, GeometryError> {
        Ok(self.wet(area)?.centroid())
    }

    pub fn wetted_perimeter(&self, area: f64) -> Result<f64, GeometryError> {
        Ok(self.wet(area)?.wetted_perimeter())
    }

    pub fn hydraulic_radius(&self, area: f64) -> Result<f64, GeometryError> {
        Ok(self.wet(area)?.hydraulic_radius())
    }

    /// Coefficient `I` in `g I2 cos(theta) = I S'` for a circular pipe,
    /// evaluated at the water level `level`.
    pub fn pressure_source_term(&self, level: f64) -> f64 {
        let r = self.radius;
        let x = (level / r).clamp(-1.0, 1.0);
        let chord = 2.0 * (r * r - level * level).max(0.0).sqrt();
        (level * PI / 2.0 + level * x.asin() + chord / 2.0) / (2.0 * PI)
    }

    /// Derivative of the wet area with respect to the full section at a fixed
    /// level, `dA/dS |_h = (arcsin(h/R) + pi/2) / pi`.
    pub fn area_section_derivative(&self, level: f64) -> f64 {
        let x = (level / self.radius).clamp(-1.0, 1.0);
        (x.asin() + PI / 2.0) / PI
    }
}

/// Root of `omega - sin(omega) = target` on `[0, pi]`, with `target` in
/// `[0, pi]`. Newton iteration safeguarded by bisection.
fn solve_segment_angle(target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    if target >= PI {
        return PI;
    }
    let (mut lo, mut hi) = (0.0_f64, PI);
    let mut omega = (6.0 * target).cbrt().clamp(0.0, PI);
    for _ in 0..200 {
        let f = omega_minus_sin(omega) - target;
        if f > 0.0 {
            hi = omega;
        } else {
            lo = omega;
        }
        let df = 1.0 - omega.cos();
        let mut next = if df > 0.0 { omega - f / df } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - omega).abs();
        omega = next;
        if step <= 1e-15 * omega.max(1e-300) || hi - lo <= 1e-15 * omega {
            break;
        }
    }
    omega
}

/// A circular section filled to a given wet area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WetSection {
    radius: f64,
    area: f64,
    omega: f64,
    dry_omega: f64,
}

impl WetSection {
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Angle of the wetted arc.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn level(&self) -> f64 {
        if self.omega <= PI {
            -self.radius * (0.5 * self.omega).cos()
        } else {
            self.radius * (0.5 * self.dry_omega).cos()
        }
    }

    pub fn surface_width(&self) -> f64 {
        2.0 * self.radius * (0.5 * self.omega.min(self.dry_omega)).sin()
    }

    pub fn wetted_perimeter(&self) -> f64 {
        self.radius * self.omega
    }

    pub fn hydraulic_radius(&self) -> f64 {
        self.area / self.wetted_perimeter()
    }

    pub fn hydrostatic_integral(&self) -> f64 {
        let r = self.radius;
        if self.omega < SERIES_OMEGA {
            // hA + T^3/12 cancels to leading order near the invert
            let s = self.omega;
            let s2 = s * s;
            let poly = 1.0 / 240.0
                + s2 * (-11.0 / 40_320.0
                    + s2 * (17.0 / 1_935_360.0
                        + s2 * (-461.0 / 2_554_675_200.0 + s2 * 8303.0 / 3_188_234_649_600.0)));
            r * r * r * s2 * s2 * s * poly
        } else {
            let t = self.surface_width();
            self.level() * self.area + t * t * t / 12.0
        }
    }

    /// `Z`-coordinate of the wet-area centroid, `h - I1/A`.
    pub fn centroid(&self) -> f64 {
        let t = self.surface_width();
        -t * t * t / (12.0 * self.area)
    }
}

/// One cell of the discretized pipe. Quantities are piecewise constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub x_center: f64,
    pub dx: f64,
    pub radius: f64,
    /// Full cross-section `S = pi R^2`.
    pub section: f64,
    /// Elevation `b` of the pipe axis.
    pub elevation: f64,
    pub cos_theta: f64,
    pub sin_theta: f64,
}

impl CellGeometry {
    pub fn new(
        x_center: f64,
        dx: f64,
        radius: f64,
        elevation: f64,
        sin_theta: f64,
    ) -> Result<Self, GeometryError> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(GeometryError::InvalidPipe(format!("cell length must be positive, got {dx}")));
        }
        let section = CircularSection::new(radius)?.full_area();
        if !(sin_theta.abs() < 1.0) {
            return Err(GeometryError::InvalidPipe(format!(
                "axis slope sin(theta) = {sin_theta} leaves no positive cos(theta)"
            )));
        }
        let cos_theta = (1.0 - sin_theta * sin_theta).sqrt();
        Ok(Self { x_center, dx, radius, section, elevation, cos_theta, sin_theta })
    }

    pub fn cross_section(&self) -> CircularSection {
        CircularSection { radius: self.radius }
    }

    pub fn x_left(&self) -> f64 {
        self.x_center - 0.5 * self.dx
    }

    pub fn x_right(&self) -> f64 {
        self.x_center + 0.5 * self.dx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeGeometry {
    cells: Vec<CellGeometry>,
    length: f64,
}

impl PipeGeometry {
    pub fn new(cells: Vec<CellGeometry>) -> Result<Self, GeometryError> {
        if cells.is_empty() {
            return Err(GeometryError::InvalidPipe("pipe needs at least one cell".into()));
        }
        for pair in cells.windows(2) {
            if !(pair[1].x_center > pair[0].x_center) {
                return Err(GeometryError::InvalidPipe(format!(
                    "cell centres not increasing at x = {}",
                    pair[1].x_center
                )));
            }
        }
        let length = cells.iter().map(|c| c.dx).sum();
        Ok(Self { cells, length })
    }

    /// Uniform mesh of `n` cells over `[0, length]` with affine radius and
    /// axis elevation (constant slope).
    pub fn affine(
        length: f64,
        n: usize,
        radius_upstream: f64,
        radius_downstream: f64,
        elevation_upstream: f64,
        elevation_downstream: f64,
    ) -> Result<Self, GeometryError> {
        if n == 0 || !(length > 0.0) {
            return Err(GeometryError::InvalidPipe(format!("need n >= 1 and length > 0 (n = {n}, L = {length})")));
        }
        let dx = length / n as f64;
        let sin_theta = (elevation_downstream - elevation_upstream) / length;
        let cells = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * dx;
                let s = x / length;
                let radius = radius_upstream + s * (radius_downstream - radius_upstream);
                let elevation = elevation_upstream + s * (elevation_downstream - elevation_upstream);
                CellGeometry::new(x, dx, radius, elevation, sin_theta)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut pipe = Self::new(cells)?;
        pipe.length = length;
        Ok(pipe)
    }

    pub fn cells(&self) -> &[CellGeometry] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn min_dx(&self) -> f64 {
        self.cells.iter().map(|c| c.dx).fold(f64::INFINITY, f64::min)
    }

    /// Index of the cell containing `x`, clamped to the pipe ends.
    pub fn locate(&self, x: f64) -> usize {
        self.cells
            .iter()
            .position(|c| x < c.x_right())
            .unwrap_or(self.cells.len() - 1)
    }
}
