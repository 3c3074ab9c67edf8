//! Interfaces separating a free-surface cell from a pressurized one.
//!
//! The transition point is a discontinuity of speed `w`. The zone on each
//! side is linearized at its own cell state (lagged `A~_l = A_l`,
//! `A~_r = A_r`), and the states `U-`, `U+` on both sides of the front are
//! found from the Rankine-Hugoniot relations plus the incoming
//! characteristics.

use log::warn;

use super::linear::{jump_between, linearize, solve_nontransition, traces_from_fan, upwinded_source, WaveFan};
use super::{Fallback, InterfaceInput, InterfaceSolution, RiemannError, TransitionInfo, TransitionKind};
use crate::flowstate::{celerity, momentum_flux, specific_head, Regime, MIN_AREA};
use crate::newton::{self, NewtonOptions};

/// Target of the scaled residual. Solves stopping above it but below
/// `ACCEPT` are still accepted.
const TARGET: f64 = 1e-14;
const ACCEPT: f64 = 1e-10;

/// `|w_pred| <= STATIONARY c` is a transition point at rest.
const STATIONARY: f64 = 1e-9;

fn options() -> NewtonOptions {
    NewtonOptions { max_iterations: 50, tolerance: TARGET, ..NewtonOptions::default() }
}

/// `sum(terms) / sum(|terms|)`.
fn scaled(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let mag: f64 = terms.iter().map(|t| t.abs()).sum();
    if mag > 0.0 {
        sum / mag
    } else {
        0.0
    }
}

/// Momentum jump relation `F_b - F_a = w (Q_b - Q_a)` relative to the size
/// of its terms. The ratio of the two jump speeds is ill-conditioned for
/// weak fronts, this form is not.
fn momentum_gap(f_a: f64, f_b: f64, q_a: f64, q_b: f64, w: f64) -> f64 {
    let scale = f_a.abs() + f_b.abs() + w.abs() * (q_a.abs() + q_b.abs());
    if scale > 0.0 {
        ((f_b - f_a) - w * (q_b - q_a)).abs() / scale
    } else {
        0.0
    }
}

/// Speed `(Q_r - Q_l) / (A_r - A_l)` of the transition point.
pub fn predict_interface_speed(a_left: f64, q_left: f64, a_right: f64, q_right: f64) -> Result<f64, RiemannError> {
    let da = a_right - a_left;
    if da.abs() < 1e-12 * a_left.max(a_right) {
        return Err(RiemannError::DegenerateJump { area: a_left });
    }
    Ok((q_right - q_left) / da)
}

/// Regime used when a transition interface is treated as an ordinary one:
/// the regime of the cell the discharge flows into.
fn downwind_regime(input: &InterfaceInput) -> Regime {
    let q = 0.5 * (input.left.discharge + input.right.discharge);
    let a = input.left.area.max(input.right.area);
    let tiny = 1e-14 * a * input.consts.sonic_speed;
    if q > tiny {
        input.right.regime
    } else {
        input.left.regime
    }
}

/// Solves a transition interface. Coinciding wet areas fall back to the
/// non-transition solver in the downwind regime, a failed nonlinear solve to
/// the non-transition solver in the free-surface regime.
pub fn solve_transition(input: &InterfaceInput) -> Result<InterfaceSolution, RiemannError> {
    let (l, r) = (&input.left, &input.right);
    let w = match predict_interface_speed(l.area, l.discharge, r.area, r.discharge) {
        Ok(w) => w,
        Err(_) => return solve_nontransition(input, downwind_regime(input)),
    };
    let stationary = w.abs() <= STATIONARY * input.consts.sonic_speed;
    let case = match (stationary, w > 0.0, l.regime) {
        (true, _, _) => TransitionKind::Stationary,
        (false, true, Regime::Pressurized) => TransitionKind::PressureDownstream,
        (false, true, Regime::FreeSurface) => TransitionKind::FreeSurfaceDownstream,
        (false, false, Regime::FreeSurface) => TransitionKind::PressureUpstream,
        (false, false, Regime::Pressurized) => TransitionKind::FreeSurfaceUpstream,
    };
    let attempt = match case {
        TransitionKind::Stationary => solve_transition_stationary(input),
        TransitionKind::PressureDownstream => solve_transition_pressure_downstream(input),
        TransitionKind::FreeSurfaceDownstream => solve_transition_freesurface_downstream(input),
        _ => solve_transition_upstream(input),
    };
    let rejected = match attempt {
        Ok(sol) => {
            let info = sol.transition.expect("transition solvers report their front");
            if !info.admissible {
                Fallback::Inadmissible
            } else if !(sol.am > MIN_AREA && sol.ap > MIN_AREA) {
                // a linearized fan over a strong front can overshoot
                Fallback::DryTrace
            } else {
                return Ok(sol);
            }
        }
        Err(RiemannError::InadmissibleFront { .. }) => Fallback::Inadmissible,
        Err(_) => Fallback::NoConvergence,
    };
    warn!("{case:?} transition rejected ({rejected:?}); treating the interface as a free-surface one");
    // the pressurized linearization across a free-surface cell turns small
    // area gaps into acoustic-size discharges
    let mut sol = solve_nontransition(input, Regime::FreeSurface)?;
    sol.transition = Some(TransitionInfo {
        kind: case,
        speed: w,
        residual: f64::NAN,
        rh_mismatch: f64::NAN,
        admissible: false,
        iterations: 0,
        fallback: Some(rejected),
    });
    Ok(sol)
}

/// Upstream-moving fronts, by reflection of the downstream solvers.
pub fn solve_transition_upstream(input: &InterfaceInput) -> Result<InterfaceSolution, RiemannError> {
    let upstream = |k| match k {
        TransitionKind::PressureDownstream => TransitionKind::PressureUpstream,
        TransitionKind::FreeSurfaceDownstream => TransitionKind::FreeSurfaceUpstream,
        k => k,
    };
    let mirror = input.mirrored();
    let sol = match mirror.left.regime {
        Regime::Pressurized => solve_transition_pressure_downstream(&mirror),
        Regime::FreeSurface => solve_transition_freesurface_downstream(&mirror),
    }
    .map_err(|e| match e {
        RiemannError::TransitionFailure { kind, residual, iterations } => {
            RiemannError::TransitionFailure { kind: upstream(kind), residual, iterations }
        }
        RiemannError::InadmissibleFront { kind, speed } => RiemannError::InadmissibleFront { kind: upstream(kind), speed: -speed },
        e => e,
    })?;
    let mut back = sol.mirrored();
    if let Some(t) = back.transition.as_mut() {
        t.kind = upstream(t.kind);
    }
    Ok(back)
}

/// Pressurized zone on the left pushing into a free-surface right cell at
/// `w > 0`. `U+ = U_r`; `U-` is pressurized and joined to `U_l` by the
/// stationary waves and the `u~_l - c` wave.
pub fn solve_transition_pressure_downstream(input: &InterfaceInput) -> Result<InterfaceSolution, RiemannError> {
    if !(input.left.regime == Regime::Pressurized && input.right.regime == Regime::FreeSurface) {
        return Err(RiemannError::WrongCase("pressure-downstream solver needs E_l = 1, E_r = 0"));
    }
    let k = input.consts;
    let (g, c) = (k.gravity, k.sonic_speed);
    let rg = input.right_geom;
    let (a_l, q_l) = (input.left.area, input.left.discharge);
    let (a_r, q_r) = (input.right.area, input.right.discharge);
    let lin = linearize(input.left_geom, rg, a_l, q_l, Regime::Pressurized, k)?;
    let psi = upwinded_source(input, &lin)?;
    let u = lin.velocity;
    let at = lin.area;
    let f_r = momentum_flux(rg, a_r, q_r, Regime::FreeSurface, k)?;

    let residual = |x: &[f64]| -> Option<Vec<f64>> {
        let (am, qm) = (x[0], x[1]);
        if !(am > MIN_AREA) || am == a_r {
            return None;
        }
        let f_m = momentum_flux(rg, am, qm, Regime::Pressurized, k).ok()?;
        let rh = (q_r - qm) * (q_r - qm) / (a_r - am);
        Some(vec![
            scaled(&[f_r, -f_m, -rh]),
            scaled(&[qm, -q_l, -(am - a_l) * (u - c), g * psi * at / (c + u)]),
        ])
    };
    let scale = [a_l, a_l * (u.abs() + (g * lin.radius).sqrt())];
    let out = newton::solve(residual, &[a_l, q_l], &scale, &options());
    if !(out.residual <= ACCEPT) {
        return Err(RiemannError::TransitionFailure {
            kind: TransitionKind::PressureDownstream,
            residual: out.residual,
            iterations: out.iterations,
        });
    }
    let (am_, qm_) = (out.x[0], out.x[1]);
    let f_m = momentum_flux(rg, am_, qm_, Regime::Pressurized, k)?;
    let w = (q_r - qm_) / (a_r - am_);
    if !(w > 0.0) {
        // a root outside this case, typically an acoustic wave
        return Err(RiemannError::InadmissibleFront { kind: TransitionKind::PressureDownstream, speed: w });
    }
    let rh_mismatch = momentum_gap(f_m, f_r, qm_, q_r, w);
    let c_r = celerity(rg, a_r, Regime::FreeSurface, k)?;
    let admissible = q_r / a_r + c_r < w && w < u + c;
    if !admissible {
        warn!("pressurizing front speed {w} outside ({}, {})", q_r / a_r + c_r, u + c);
    }
    let ap = am_;
    let am = ap + g * at * psi / (c * c - u * u);
    Ok(InterfaceSolution {
        am,
        ap,
        qmp: qm_,
        left_regime: Regime::Pressurized,
        right_regime: Regime::Pressurized,
        transition: Some(TransitionInfo {
            kind: TransitionKind::PressureDownstream,
            speed: w,
            residual: out.residual,
            rh_mismatch,
            admissible,
            iterations: out.iterations,
            fallback: None,
        }),
    })
}

/// Free-surface zone on the left advancing into a pressurized right cell at
/// `w = w_pred > 0`. `U+` is joined to `U_r` by the `u~_r + c` wave; the
/// front carries mass, momentum and total head jumps.
pub fn solve_transition_freesurface_downstream(input: &InterfaceInput) -> Result<InterfaceSolution, RiemannError> {
    if !(input.left.regime == Regime::FreeSurface && input.right.regime == Regime::Pressurized) {
        return Err(RiemannError::WrongCase("free-surface-downstream solver needs E_l = 0, E_r = 1"));
    }
    let k = input.consts;
    let c = k.sonic_speed;
    let rg = input.right_geom;
    let (a_l, q_l) = (input.left.area, input.left.discharge);
    let (a_r, q_r) = (input.right.area, input.right.discharge);
    let w = predict_interface_speed(a_l, q_l, a_r, q_r)?;
    let lin = linearize(input.left_geom, rg, a_l, q_l, Regime::FreeSurface, k)?;
    let u_r = q_r / a_r;

    let residual = |x: &[f64]| -> Option<Vec<f64>> {
        let (am, qm, ap, qp) = (x[0], x[1], x[2], x[3]);
        if !(am > MIN_AREA && ap > MIN_AREA) {
            return None;
        }
        let f_m = momentum_flux(rg, am, qm, Regime::FreeSurface, k).ok()?;
        let f_p = momentum_flux(rg, ap, qp, Regime::Pressurized, k).ok()?;
        let h_m = specific_head(rg, am, qm, Regime::FreeSurface, k).ok()?;
        let h_p = specific_head(rg, ap, qp, Regime::Pressurized, k).ok()?;
        Some(vec![
            scaled(&[q_r, -qp, -(a_r - ap) * (u_r + c)]),
            scaled(&[f_p, -f_m, -w * qp, w * qm]),
            scaled(&[h_p, -h_m, -w * qp / ap, w * qm / am]),
            scaled(&[w * ap, -w * am, -qp, qm]),
        ])
    };
    let qs = a_l * ((k.gravity * lin.radius).sqrt() + lin.velocity.abs());
    let out = newton::solve(residual, &[a_l, q_l, a_r, q_r], &[a_l, qs, a_r, qs], &options());
    if !(out.residual <= ACCEPT) {
        return Err(RiemannError::TransitionFailure {
            kind: TransitionKind::FreeSurfaceDownstream,
            residual: out.residual,
            iterations: out.iterations,
        });
    }
    let (am_, qm_, ap_, qp_) = (out.x[0], out.x[1], out.x[2], out.x[3]);
    let f_m = momentum_flux(rg, am_, qm_, Regime::FreeSurface, k)?;
    let f_p = momentum_flux(rg, ap_, qp_, Regime::Pressurized, k)?;
    let rh_mismatch = momentum_gap(f_m, f_p, qm_, qp_, (qp_ - qm_) / (ap_ - am_));
    let admissible = lin.velocity + lin.celerity < w && w < u_r + c;
    if !admissible {
        warn!("free-surface front speed {w} outside ({}, {})", lin.velocity + lin.celerity, u_r + c);
    }
    let fan = WaveFan::new(&lin, jump_between(input, am_, qm_)?, k)?;
    let (am, ap, qmp) = traces_from_fan(&fan, a_l, am_, q_l);
    Ok(InterfaceSolution {
        am,
        ap,
        qmp,
        left_regime: Regime::FreeSurface,
        right_regime: Regime::FreeSurface,
        transition: Some(TransitionInfo {
            kind: TransitionKind::FreeSurfaceDownstream,
            speed: w,
            residual: out.residual,
            rh_mismatch,
            admissible,
            iterations: out.iterations,
            fallback: None,
        }),
    })
}

/// Transition point at rest on the interface. The left zone emits the
/// `u_l - c_l` wave and the right zone the `u_r + c_r` wave; across the
/// interface the discharge is continuous and the total head drops by the
/// friction loss. A still-water mixed state is left untouched.
pub fn solve_transition_stationary(input: &InterfaceInput) -> Result<InterfaceSolution, RiemannError> {
    let k = input.consts;
    let g = k.gravity;
    let (lg, rg) = (input.left_geom, input.right_geom);
    let (sl, sr) = (input.left, input.right);
    let c_l = celerity(lg, sl.area, sl.regime, k)?;
    let c_r = celerity(rg, sr.area, sr.regime, k)?;
    let l4 = sl.velocity() - c_l;
    let l5 = sr.velocity() + c_r;
    let friction = if input.friction {
        let lin = linearize(lg, rg, 0.5 * (sl.area + sr.area), 0.0, sl.regime, k)?;
        // friction head loss, without the geometric part of the source
        let geometric = (rg.elevation - lg.elevation)
            + lin.level * (rg.cos_theta - lg.cos_theta)
            + lin.psi_coef * (rg.section - lg.section) / (g * lin.area);
        upwinded_source(input, &lin)? - geometric
    } else {
        0.0
    };
    let bl = g * lg.elevation;
    let br = g * rg.elevation;

    let residual = |x: &[f64]| -> Option<Vec<f64>> {
        let am = sl.area + x[0];
        let ap = sr.area - x[1];
        if !(am > MIN_AREA && ap > MIN_AREA) {
            return None;
        }
        let ql = sl.discharge + l4 * x[0];
        let qr = sr.discharge - l5 * x[1];
        let q = 0.5 * (ql + qr);
        let h_l = specific_head(lg, am, q, sl.regime, k).ok()?;
        let h_r = specific_head(rg, ap, q, sr.regime, k).ok()?;
        Some(vec![scaled(&[ql, -qr]), scaled(&[h_r, br, -h_l, -bl, g * friction])])
    };
    let a_min = sl.area.min(sr.area);
    let out = newton::solve(residual, &[0.0, 0.0], &[a_min, a_min], &options());
    if !(out.residual <= ACCEPT) {
        return Err(RiemannError::TransitionFailure {
            kind: TransitionKind::Stationary,
            residual: out.residual,
            iterations: out.iterations,
        });
    }
    let admissible = l4 < 0.0 && l5 > 0.0;
    if !admissible {
        warn!("stationary transition with outgoing waves {l4}, {l5}");
    }
    let am = sl.area + out.x[0];
    let ap = sr.area - out.x[1];
    let qmp = 0.5 * ((sl.discharge + l4 * out.x[0]) + (sr.discharge - l5 * out.x[1]));
    Ok(InterfaceSolution {
        am,
        ap,
        qmp,
        left_regime: sl.regime,
        right_regime: sr.regime,
        transition: Some(TransitionInfo {
            kind: TransitionKind::Stationary,
            speed: 0.0,
            residual: out.residual,
            rh_mismatch: 0.0,
            admissible,
            iterations: out.iterations,
            fallback: None,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowstate::{CellState, PhysicalConstants};
    use crate::geometry::CellGeometry;
    use approx::assert_relative_eq;

    fn pipe(db: f64) -> (CellGeometry, CellGeometry) {
        (
            CellGeometry::new(0.5, 1.0, 0.5, 1.0, 0.0).unwrap(),
            CellGeometry::new(1.5, 1.0, 0.5, 1.0 + db, 0.0).unwrap(),
        )
    }

    fn input<'a>(
        l: &'a CellGeometry,
        r: &'a CellGeometry,
        sl: CellState,
        sr: CellState,
        k: &'a PhysicalConstants,
    ) -> InterfaceInput<'a> {
        InterfaceInput {
            left_geom: l,
            right_geom: r,
            left: sl,
            right: sr,
            atilde: 0.5 * (sl.area + sr.area),
            consts: k,
            friction: false,
        }
    }

    #[test]
    fn speed_prediction() {
        assert_eq!(predict_interface_speed(1.0, 2.0, 2.0, 5.0).unwrap(), 3.0);
        assert_eq!(predict_interface_speed(1.0, 2.0, 2.0, 2.0).unwrap(), 0.0);
        assert!(matches!(predict_interface_speed(1.0, 2.0, 1.0, 3.0), Err(RiemannError::DegenerateJump { .. })));
    }

    #[test]
    fn pressurizing_front_satisfies_jump_relations() {
        let k = PhysicalConstants::new(9.81, 50.0, 80.0);
        let (lg, rg) = pipe(0.0);
        let s = lg.section;
        let sl = CellState::new(s * 1.0005, 1.5, Regime::Pressurized);
        let sr = CellState::new(0.4, 0.1, Regime::FreeSurface);
        let sol = solve_transition(&input(&lg, &rg, sl, sr, &k)).unwrap();
        let info = sol.transition.unwrap();
        assert_eq!(info.kind, TransitionKind::PressureDownstream);
        assert!(info.fallback.is_none());
        assert!(info.residual < ACCEPT && info.rh_mismatch < 1e-8, "{info:?}");
        assert!(sol.left_regime.is_pressurized() && sol.right_regime.is_pressurized());
        // U- sits on the front: mass and momentum balance with U_r at speed w
        let (am, qm) = (sol.ap, sol.qmp);
        let w = info.speed;
        assert_relative_eq!(w * (sr.area - am), sr.discharge - qm, max_relative = 1e-9);
        let fm = momentum_flux(&rg, am, qm, Regime::Pressurized, &k).unwrap();
        let fr = momentum_flux(&rg, sr.area, sr.discharge, Regime::FreeSurface, &k).unwrap();
        assert_relative_eq!(w * (sr.discharge - qm), fr - fm, max_relative = 1e-8);
        // flat uniform pipe: no stationary wave, so both traces agree
        assert_relative_eq!(sol.am, sol.ap, max_relative = 1e-14);
    }

    #[test]
    fn depressurizing_front_converges() {
        let k = PhysicalConstants::new(9.81, 50.0, 80.0);
        let (lg, rg) = pipe(0.0);
        let s = lg.section;
        let sl = CellState::new(0.7, 0.5, Regime::FreeSurface);
        let sr = CellState::new(s, 1.5, Regime::Pressurized);
        let sol = solve_transition(&input(&lg, &rg, sl, sr, &k)).unwrap();
        let info = sol.transition.unwrap();
        assert_eq!(info.kind, TransitionKind::FreeSurfaceDownstream);
        assert!(info.fallback.is_none() && info.residual < ACCEPT && info.rh_mismatch < 1e-8, "{info:?}");
        assert!(!sol.left_regime.is_pressurized() && !sol.right_regime.is_pressurized());
        assert!(info.admissible && sol.am > 0.0 && sol.ap > 0.0 && sol.qmp.is_finite());
    }

    #[test]
    fn failed_front_falls_back_downwind() {
        let k = PhysicalConstants::new(9.81, 50.0, 80.0);
        let (lg, rg) = pipe(0.0);
        // no front state exists for this jump at the predicted speed
        let sl = CellState::new(0.6, 0.05, Regime::FreeSurface);
        let sr = CellState::new(lg.section, 0.3, Regime::Pressurized);
        let sol = solve_transition(&input(&lg, &rg, sl, sr, &k)).unwrap();
        let info = sol.transition.unwrap();
        assert!(info.fallback.is_some() && info.kind == TransitionKind::FreeSurfaceDownstream);
        assert_eq!(sol.left_regime, Regime::FreeSurface);
    }

    #[test]
    fn upstream_fronts_mirror_downstream_ones() {
        let k = PhysicalConstants::new(9.81, 50.0, 80.0);
        let (lg, rg) = pipe(0.05);
        let s = lg.section;
        let cases = [
            (CellState::new(0.4, -0.1, Regime::FreeSurface), CellState::new(s * 1.0005, -1.5, Regime::Pressurized)),
            (CellState::new(s, -1.5, Regime::Pressurized), CellState::new(0.7, -0.5, Regime::FreeSurface)),
        ];
        for (sl, sr) in cases {
            let inp = input(&lg, &rg, sl, sr, &k);
            let sol = solve_transition(&inp).unwrap();
            let back = solve_transition(&inp.mirrored()).unwrap().mirrored();
            let info = sol.transition.unwrap();
            assert!(info.speed < 0.0 && info.fallback.is_none());
            assert!(matches!(info.kind, TransitionKind::PressureUpstream | TransitionKind::FreeSurfaceUpstream));
            assert_eq!((sol.am, sol.ap, sol.qmp), (back.am, back.ap, back.qmp));
        }
    }

    #[test]
    fn still_mixed_interface_is_untouched() {
        let k = PhysicalConstants::new(9.81, 30.0, 80.0);
        let lg = CellGeometry::new(0.5, 1.0, 0.5, 0.0, 0.0).unwrap();
        let rg = CellGeometry::new(1.5, 1.0, 0.5, 0.1, 0.0).unwrap();
        // head at the crown of the left cell
        let head = k.gravity * 0.5;
        let al = crate::wellbalance::area_for_head(&lg, head, Regime::Pressurized, &k, 0).unwrap();
        let ar = crate::wellbalance::area_for_head(&rg, head, Regime::FreeSurface, &k, 1).unwrap();
        let sl = CellState::new(al, 0.0, Regime::Pressurized);
        let sr = CellState::new(ar, 0.0, Regime::FreeSurface);
        let sol = solve_transition(&input(&lg, &rg, sl, sr, &k)).unwrap();
        let info = sol.transition.unwrap();
        assert_eq!(info.kind, TransitionKind::Stationary);
        assert_eq!(info.iterations, 0);
        assert_eq!((sol.am, sol.ap, sol.qmp), (al, ar, 0.0));
    }

    #[test]
    fn equal_areas_fall_back() {
        let k = PhysicalConstants::new(9.81, 50.0, 80.0);
        let (lg, rg) = pipe(0.0);
        let s = lg.section;
        let sl = CellState::new(s, 0.2, Regime::Pressurized);
        let sr = CellState::new(s, 0.2, Regime::FreeSurface);
        let sol = solve_transition(&input(&lg, &rg, sl, sr, &k)).unwrap();
        assert!(sol.transition.is_none());
        assert_eq!(sol.right_regime, Regime::FreeSurface);
    }

    #[test]
    fn wrong_regimes_are_rejected() {
        let k = PhysicalConstants::default();
        let (lg, rg) = pipe(0.0);
        let fs = CellState::new(0.3, 0.0, Regime::FreeSurface);
        assert!(matches!(
            solve_transition_pressure_downstream(&input(&lg, &rg, fs, fs, &k)),
            Err(RiemannError::WrongCase(_))
        ));
        assert!(matches!(
            solve_transition_freesurface_downstream(&input(&lg, &rg, fs, fs, &k)),
            Err(RiemannError::WrongCase(_))
        ));
    }
}
