//! Independent oracles shared by the integration tests and the acceptance
//! harness. The oracles never call into the closed forms under test; only
//! the comparison drivers at the end do.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Matrix5, Vector5};
use pfs_core::riemann::{solve_nontransition, InterfaceInput};
use pfs_core::{CellGeometry, CellState, PhysicalConstants, Regime};
use rand::Rng;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rule(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = rule(fa, flm, fm, m - a);
        let right = rule(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, rule(fa, fm, fb, b - a), tol, 40)
}

/// Circular section integrated in the polar angle `phi` measured from the
/// invert, with `z = -R cos(phi)` and chord width `2 R sin(phi)`.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSection {
    pub radius: f64,
}

impl QuadratureSection {
    fn angle(&self, level: f64) -> f64 {
        (-level / self.radius).clamp(-1.0, 1.0).acos()
    }

    fn tol(&self) -> f64 {
        1e-15 * self.radius * self.radius
    }

    pub fn area(&self, level: f64) -> f64 {
        let r = self.radius;
        simpson(&|p: f64| 2.0 * r * r * p.sin().powi(2), 0.0, self.angle(level), self.tol())
    }

    /// `int (h - z) sigma(z) dz`.
    pub fn i1(&self, level: f64) -> f64 {
        let r = self.radius;
        let f = |p: f64| (level + r * p.cos()) * 2.0 * r * r * p.sin().powi(2);
        simpson(&f, 0.0, self.angle(level), self.tol() * r)
    }

    pub fn perimeter(&self, level: f64) -> f64 {
        let r = self.radius;
        simpson(&|_| 2.0 * r, 0.0, self.angle(level), self.tol())
    }

    pub fn width(&self, level: f64) -> f64 {
        2.0 * self.radius * self.angle(level).sin()
    }

    /// Centroid height `h - I1 / A`.
    pub fn centroid(&self, level: f64) -> f64 {
        level - self.i1(level) / self.area(level)
    }

    /// Level holding `area`: bisection on the quadrature, polished by
    /// Newton steps with `dA/dh = T` kept inside the bracket.
    pub fn level(&self, area: f64) -> f64 {
        let (mut lo, mut hi) = (-self.radius, self.radius);
        for _ in 0..10 {
            let mid = 0.5 * (lo + hi);
            if self.area(mid) < area {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut h = 0.5 * (lo + hi);
        for _ in 0..20 {
            let step = (self.area(h) - area) / self.width(h);
            let next = (h - step).clamp(lo, hi);
            if (next - h).abs() <= 1e-16 * self.radius {
                return next;
            }
            h = next;
        }
        h
    }

    pub fn full(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Regime update written directly from the rules, with the end cells
/// padded by copies of their only neighbour.
#[allow(clippy::if_same_then_else)] // one branch per rule
pub fn regime_rules(previous: &[Regime], areas: &[f64], sections: &[f64]) -> Vec<Regime> {
    let n = previous.len();
    let mut padded = Vec::with_capacity(n + 2);
    padded.push(if n > 1 { previous[1] } else { previous[0] });
    padded.extend_from_slice(previous);
    padded.push(if n > 1 { previous[n - 2] } else { previous[0] });
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let e = padded[i + 1];
        let rises = areas[i] >= sections[i];
        let next = if rises {
            Regime::Pressurized
        } else if e == Regime::FreeSurface {
            Regime::FreeSurface
        } else if padded[i] == Regime::FreeSurface || padded[i + 2] == Regime::FreeSurface {
            Regime::FreeSurface
        } else {
            Regime::Pressurized
        };
        out.push(next);
    }
    out
}

/// Interface state for the eigen-decomposition oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleInterface {
    pub regime: Regime,
    pub gravity: f64,
    pub sonic: f64,
    /// `(b, cos(theta), R)` on each side.
    pub left_geom: (f64, f64, f64),
    pub right_geom: (f64, f64, f64),
    pub left: (f64, f64),
    pub right: (f64, f64),
    pub atilde: f64,
}

/// Traces `(AM, AP, QMP)` obtained by building `D` at the mean geometry,
/// finding its spectrum with a Schur decomposition and its eigenvectors as
/// SVD null spaces, and summing the wave strengths by direction.
pub fn eigen_traces(s: &OracleInterface) -> (f64, f64, f64) {
    let g = s.gravity;
    let (bl, cl, rl) = s.left_geom;
    let (br, cr, rr) = s.right_geom;
    let (sl, sr) = (PI * rl * rl, PI * rr * rr);
    let section = 0.5 * (sl + sr);
    let radius = (section / PI).sqrt();
    let cos = 0.5 * (cl + cr);
    let a = s.atilde;
    let u = 0.5 * (s.left.1 + s.right.1) / a;
    let (level, cel, psi) = match s.regime {
        Regime::Pressurized => {
            let c = s.sonic;
            (radius, c, g * section * cos / (2.0 * PI * radius) - c * c * a / section)
        }
        Regime::FreeSurface => {
            // g S_phys dH/dS_phys cos(theta) - c^2 with S_phys = A and
            // dH/dS_phys = 1 / T
            let q = QuadratureSection { radius };
            let h = q.level(a);
            let t = q.width(h);
            let c2 = g * a * cos / t;
            (h, c2.sqrt(), g * a * cos / t - c2)
        }
    };
    let mut d = Matrix5::zeros();
    d[(3, 4)] = 1.0;
    d[(4, 0)] = g * a;
    d[(4, 1)] = g * a * level;
    d[(4, 2)] = psi;
    d[(4, 3)] = cel * cel - u * u;
    d[(4, 4)] = 2.0 * u;

    // the triple zero may come out of the Schur form as a 2x2 block with a
    // rounding-size imaginary part
    let lambdas = d.schur().complex_eigenvalues().map(|z| z.re);
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&i, &j| lambdas[i].abs().total_cmp(&lambdas[j].abs()));
    let moving = [lambdas[order[3]], lambdas[order[4]]];

    let mut basis = Matrix5::zeros();
    let null = |m: Matrix5<f64>, k: usize| -> Vec<Vector5<f64>> {
        let svd = m.svd(false, true);
        let vt = svd.v_t.expect("right vectors");
        let mut idx: Vec<usize> = (0..5).collect();
        idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        idx[..k].iter().map(|&i| vt.row(i).transpose()).collect()
    };
    for (col, v) in null(d, 3).into_iter().enumerate() {
        basis.set_column(col, &v);
    }
    for (k, &lam) in moving.iter().enumerate() {
        let v = null(d - Matrix5::identity() * lam, 1).remove(0);
        basis.set_column(3 + k, &v);
    }
    let jump = Vector5::new(br - bl, cr - cl, sr - sl, s.right.0 - s.left.0, s.right.1 - s.left.1);
    let alpha = basis.lu().solve(&jump).expect("eigenbasis");
    let (mut am, mut ap, mut qmp) = (s.left.0, s.right.0, s.left.1);
    for (k, &lam) in moving.iter().enumerate() {
        let w = basis.column(3 + k) * alpha[3 + k];
        if lam < 0.0 {
            am += w[3];
            qmp += w[4];
        } else {
            ap -= w[3];
        }
    }
    (am, ap, qmp)
}

/// Raw draw for one interface; fractions are mapped onto admissible
/// subcritical states.
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub radius: f64,
    pub radius_ratio: f64,
    pub db: f64,
    pub sin: (f64, f64),
    pub fill: (f64, f64),
    pub froude: (f64, f64),
    pub sonic: f64,
}

impl Draw {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        Self {
            radius: rng.gen_range(0.2..1.5),
            radius_ratio: rng.gen_range(0.95..1.05),
            db: rng.gen_range(-0.05..0.05),
            sin: (rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)),
            fill: (rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)),
            froude: (rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)),
            sonic: rng.gen_range(30.0..1400.0),
        }
    }
}

/// Compares the library traces with the oracle; returns the worst
/// relative difference, areas against the trace itself and discharges
/// against the flux scale `A~ (|u~| + c~)`.
pub fn interface_error(d: &Draw, regime: Regime) -> f64 {
    let k = PhysicalConstants::new(9.81, d.sonic, 80.0);
    let lg = CellGeometry::new(0.5, 1.0, d.radius, 1.0, d.sin.0).unwrap();
    let rg = CellGeometry::new(1.5, 1.0, d.radius * d.radius_ratio, 1.0 + d.db, d.sin.1).unwrap();
    let (al, ar) = match regime {
        // compressed or depressed by up to a few tens of metres of head
        Regime::Pressurized => {
            let strain = |f: f64| 1.0 + (f - 0.5) * 50.0 * 9.81 / (d.sonic * d.sonic);
            (lg.section * strain(d.fill.0), rg.section * strain(d.fill.1))
        }
        Regime::FreeSurface => (lg.section * d.fill.0, rg.section * d.fill.1),
    };
    let atilde = 0.5 * (al + ar);
    let speed = match regime {
        Regime::Pressurized => d.sonic,
        Regime::FreeSurface => {
            // the smaller of the two gravity celerities keeps u~ subcritical
            let c = |g: &CellGeometry, a: f64| {
                let w = g.cross_section().wet(a).unwrap();
                (9.81 * a * g.cos_theta / w.surface_width()).sqrt()
            };
            c(&lg, al).min(c(&rg, ar)).min(c(&lg, atilde.min(lg.section * 0.9)))
        }
    };
    let ql = d.froude.0 * speed * al.min(ar) * 0.5;
    let qr = d.froude.1 * speed * al.min(ar) * 0.5;
    let input = InterfaceInput {
        left_geom: &lg,
        right_geom: &rg,
        left: CellState::new(al, ql, regime),
        right: CellState::new(ar, qr, regime),
        atilde,
        consts: &k,
        friction: false,
    };
    let sol = solve_nontransition(&input, regime).unwrap();
    let oracle = OracleInterface {
        regime,
        gravity: k.gravity,
        sonic: k.sonic_speed,
        left_geom: (lg.elevation, lg.cos_theta, lg.radius),
        right_geom: (rg.elevation, rg.cos_theta, rg.radius),
        left: (al, ql),
        right: (ar, qr),
        atilde,
    };
    let (am, ap, qmp) = eigen_traces(&oracle);
    let flux = atilde * (0.5 * (ql + qr).abs() / atilde + speed);
    let ea = ((sol.am - am) / am).abs().max(((sol.ap - ap) / ap).abs());
    ea.max((sol.qmp - qmp).abs() / flux)
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
