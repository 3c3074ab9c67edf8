//! Damped Newton iteration with a finite-difference Jacobian, shared by the
//! transition-point solvers and the well-balanced linearization.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the max-norm of the residual.
    pub tolerance: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Maximum number of step halvings per iteration.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iterations: 50, tolerance: 1e-10, fd_step: 1e-7, max_halvings: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0_f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
}

/// Solves `f(x) = 0` from `x0`. `f` returns `None` where the residual is not
/// defined (for instance a non-positive area); such trial points are treated
/// like a failed descent and the step is halved. `scale[j]` sets the size of
/// the finite-difference step on `x[j]` when `x[j]` is near zero.
pub fn solve<F>(mut f: F, x0: &[f64], scale: &[f64], opts: &NewtonOptions) -> NewtonOutcome
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = match f(&x) {
        Some(r) => r,
        None => return NewtonOutcome { x, residual: f64::INFINITY, iterations: 0, converged: false },
    };
    let mut res = norm(&r);
    let mut iterations = 0;
    while res > opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(r.len(), n);
        for j in 0..n {
            let h = opts.fd_step * x[j].abs().max(scale[j]);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let col = match (f(&xp), f(&xm)) {
                (Some(p), Some(m)) => p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>(),
                (Some(p), None) => p.iter().zip(&r).map(|(a, b)| (a - b) / h).collect(),
                (None, Some(m)) => r.iter().zip(&m).map(|(a, b)| (a - b) / h).collect(),
                (None, None) => return NewtonOutcome { x, residual: res, iterations, converged: false },
            };
            for (i, v) in col.into_iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
        let Some(dx) = jac.lu().solve(&rhs) else {
            return NewtonOutcome { x, residual: res, iterations, converged: false };
        };
        if dx.iter().any(|v| !v.is_finite()) {
            return NewtonOutcome { x, residual: res, iterations, converged: false };
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Some(rt) = f(&trial) {
                let rn = norm(&rt);
                if rn < res {
                    x = trial;
                    r = rt;
                    res = rn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    NewtonOutcome { converged: res <= opts.tolerance, x, residual: res, iterations }
}
