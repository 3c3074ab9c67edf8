use std::f64::consts::PI;

use nalgebra::Matrix5;

use super::{InterfaceInput, InterfaceSolution, RiemannError};
use crate::flowstate::{friction_coefficient, FlowError, PhysicalConstants, Regime, MIN_AREA};
use crate::geometry::{CellGeometry, CircularSection};

/// Relative distance `||u| - c| / c` below which an interface is resonant.
const RESONANCE: f64 = 1e-10;

/// The linearized state `W~` at which `D` is frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub regime: Regime,
    pub elevation: f64,
    pub cos_theta: f64,
    pub section: f64,
    pub radius: f64,
    pub area: f64,
    pub discharge: f64,
    pub velocity: f64,
    pub celerity: f64,
    /// `H(S_phys~)`.
    pub level: f64,
    /// `Psi(W~)`, the `S`-column coefficient of the momentum row.
    pub psi_coef: f64,
}

impl Linearization {
    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.velocity - self.celerity, self.velocity + self.celerity)
    }
}

/// Freezes `D` at the mean geometry of the two cells, the wet area `atilde`
/// and the discharge `discharge`.
pub fn linearize(
    left: &CellGeometry,
    right: &CellGeometry,
    atilde: f64,
    discharge: f64,
    regime: Regime,
    consts: &PhysicalConstants,
) -> Result<Linearization, RiemannError> {
    if !(atilde > MIN_AREA && atilde.is_finite()) {
        return Err(FlowError::NonPositiveArea(atilde).into());
    }
    let g = consts.gravity;
    let c = consts.sonic_speed;
    let section = 0.5 * (left.section + right.section);
    let radius = (section / PI).sqrt();
    let cos_theta = 0.5 * (left.cos_theta + right.cos_theta);
    let (celerity, level, psi_coef) = if regime.is_pressurized() || atilde >= section {
        // d(H)/d(S) = 1 / (2 pi R) on the full section
        (c, radius, 0.5 * g * radius * cos_theta - c * c * atilde / section)
    } else {
        let wet = CircularSection::new(radius).map_err(FlowError::from)?.wet(atilde).map_err(FlowError::from)?;
        let gravity_wave = (g * atilde * cos_theta / wet.surface_width()).sqrt();
        let celerity = if gravity_wave.is_finite() { gravity_wave.min(c) } else { c };
        // g A cos / T - c(A)^2 vanishes identically below the crown
        (celerity, wet.level(), 0.0)
    };
    Ok(Linearization {
        regime,
        elevation: 0.5 * (left.elevation + right.elevation),
        cos_theta,
        section,
        radius,
        area: atilde,
        discharge,
        velocity: discharge / atilde,
        celerity,
        level,
        psi_coef,
    })
}

/// Convection matrix `D(W~)`.
pub fn convection_matrix(lin: &Linearization, consts: &PhysicalConstants) -> Matrix5<f64> {
    let g = consts.gravity;
    let u = lin.velocity;
    let c = lin.celerity;
    let mut d = Matrix5::zeros();
    d[(3, 4)] = 1.0;
    d[(4, 0)] = g * lin.area;
    d[(4, 1)] = g * lin.area * lin.level;
    d[(4, 2)] = lin.psi_coef;
    d[(4, 3)] = c * c - u * u;
    d[(4, 4)] = 2.0 * u;
    d
}

/// Dynamic-slope friction integrated over the two half cells adjacent to the
/// interface, in units of elevation.
fn friction_jump(input: &InterfaceInput) -> Result<f64, FlowError> {
    if !input.friction {
        return Ok(0.0);
    }
    let half = |geom: &CellGeometry, s: &crate::flowstate::CellState| -> Result<f64, FlowError> {
        if s.discharge == 0.0 {
            return Ok(0.0);
        }
        let k = friction_coefficient(geom, s.area, s.regime, input.consts)?;
        let u = s.velocity();
        Ok(0.5 * geom.dx * k * u * u.abs())
    };
    Ok(half(input.left_geom, &input.left)? + half(input.right_geom, &input.right)?)
}

/// Jump `(b_eff, cos(theta), S, A, Q)` across the interface, where the
/// elevation slot also carries the friction head loss.
fn interface_jump(input: &InterfaceInput) -> Result<[f64; 5], FlowError> {
    let (l, r) = (input.left_geom, input.right_geom);
    Ok([
        r.elevation - l.elevation + friction_jump(input)?,
        r.cos_theta - l.cos_theta,
        r.section - l.section,
        input.right.area - input.left.area,
        input.right.discharge - input.left.discharge,
    ])
}

/// Upwinded source `psi`: elevation, angle, section and friction jumps
/// expressed as an equivalent elevation jump.
pub fn upwinded_source(input: &InterfaceInput, lin: &Linearization) -> Result<f64, RiemannError> {
    let jump = interface_jump(input)?;
    Ok(source_from_jump(&jump, lin, input.consts))
}

fn source_from_jump(jump: &[f64; 5], lin: &Linearization, consts: &PhysicalConstants) -> f64 {
    jump[0] + lin.level * jump[1] + lin.psi_coef * jump[2] / (consts.gravity * lin.area)
}

/// Eigenstructure of `D(W~)` together with the decomposition of a jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveFan {
    /// `0, 0, 0, u - c, u + c`.
    pub eigenvalues: [f64; 5],
    /// Right eigenvectors, one per row.
    pub eigenvectors: [[f64; 5]; 5],
    pub strengths: [f64; 5],
    /// The upwinded source `psi` carried by the stationary waves.
    pub source: f64,
}

impl WaveFan {
    /// Decomposes `jump = W_r - W_l` on the eigenvectors. The elevation slot
    /// of `jump` may include the friction head loss.
    pub fn new(lin: &Linearization, jump: [f64; 5], consts: &PhysicalConstants) -> Result<Self, RiemannError> {
        let u = lin.velocity;
        let c = lin.celerity;
        if (u.abs() - c).abs() <= RESONANCE * c {
            return Err(RiemannError::Resonance { velocity: u, celerity: c });
        }
        let ga = consts.gravity * lin.area;
        let (l4, l5) = lin.eigenvalues();
        let source = source_from_jump(&jump, lin, consts);
        let a3 = -jump[1];
        let a2 = -jump[2] / ga;
        let a1 = source / (c * c - u * u);
        // wet-area jump left to the moving waves
        let moving = jump[3] + ga * a1;
        let a5 = (jump[4] - l4 * moving) / (2.0 * c);
        let a4 = (l5 * moving - jump[4]) / (2.0 * c);
        Ok(Self {
            eigenvalues: [0.0, 0.0, 0.0, l4, l5],
            eigenvectors: [
                [c * c - u * u, 0.0, 0.0, -ga, 0.0],
                [lin.psi_coef, 0.0, -ga, 0.0, 0.0],
                [lin.level, -1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0, l4],
                [0.0, 0.0, 0.0, 1.0, l5],
            ],
            strengths: [a1, a2, a3, a4, a5],
            source,
        })
    }

    /// `sum_i strength_i r_i`.
    pub fn reconstruct(&self) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (a, r) in self.strengths.iter().zip(&self.eigenvectors) {
            for (o, v) in out.iter_mut().zip(r) {
                *o += a * v;
            }
        }
        out
    }
}

/// Upwind traces `(AM, AP, QMP)`: waves moving left are summed onto the left
/// state, waves moving right are removed from the right state, and
/// stationary waves stay on the interface.
pub fn traces_from_fan(fan: &WaveFan, a_left: f64, a_right: f64, q_left: f64) -> (f64, f64, f64) {
    let mut left_a = 0.0;
    let mut right_a = 0.0;
    let mut left_q = 0.0;
    for i in 3..5 {
        let (lambda, alpha) = (fan.eigenvalues[i], fan.strengths[i]);
        if lambda < 0.0 {
            left_a += alpha * fan.eigenvectors[i][3];
            left_q += alpha * fan.eigenvectors[i][4];
        } else if lambda > 0.0 {
            right_a += alpha * fan.eigenvectors[i][3];
        }
    }
    (a_left + left_a, a_right - right_a, q_left + left_q)
}

/// Non-transition interface: both cells share the regime `regime`. In the
/// subcritical case the traces are
/// `AM = A_l + (lambda5 D' - dQ) / 2c`, `AP = A_r - (dQ - lambda4 D') / 2c`
/// and `QMP = Q_l + lambda4 (lambda5 D' - dQ) / 2c`, with
/// `D' = dA + g A~ psi / (c^2 - u^2)`.
pub fn solve_nontransition(input: &InterfaceInput, regime: Regime) -> Result<InterfaceSolution, RiemannError> {
    let q_mean = 0.5 * (input.left.discharge + input.right.discharge);
    let lin = linearize(input.left_geom, input.right_geom, input.atilde, q_mean, regime, input.consts)?;
    let fan = WaveFan::new(&lin, interface_jump(input)?, input.consts)?;
    let (am, ap, qmp) = traces_from_fan(&fan, input.left.area, input.right.area, input.left.discharge);
    Ok(InterfaceSolution { am, ap, qmp, left_regime: regime, right_regime: regime, transition: None })
}

pub(crate) fn jump_between(
    input: &InterfaceInput,
    a_end: f64,
    q_end: f64,
) -> Result<[f64; 5], FlowError> {
    let mut jump = interface_jump(input)?;
    jump[3] = a_end - input.left.area;
    jump[4] = q_end - input.left.discharge;
    Ok(jump)
}
