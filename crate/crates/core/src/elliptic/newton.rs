//! Damped inexact Newton iteration with backtracking on the sup-norm residual.

use crate::error::{Error, Result};
use crate::sum::max_abs;

pub trait NonlinearProblem {
    fn residual(&self, x: &[f64]) -> Vec<f64>;

    /// Approximately solve `J(x) δ = rhs` to relative tolerance `rtol`.
    fn solve_linearized(&self, x: &[f64], rhs: &[f64], rtol: f64) -> Result<Vec<f64>>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub krylov_tol: f64,
    pub damping: f64,
    /// Steps taken even when the initial guess already meets `tol`.
    pub min_iter: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Sup-norm residual before each step and after the last one.
    pub residuals: Vec<f64>,
}

/// Run damped Newton from `x0` until `‖R(x)‖_∞ ≤ tol`.
pub fn newton_solve<P: NonlinearProblem + ?Sized>(
    prob: &P,
    x0: Vec<f64>,
    settings: &NewtonSettings,
) -> Result<(Vec<f64>, NewtonReport)> {
    let mut x = x0;
    let mut r = prob.residual(&x);
    let mut rn = max_abs(&r);
    let mut report = NewtonReport {
        iterations: 0,
        residuals: vec![rn],
    };
    while rn > settings.tol || report.iterations < settings.min_iter {
        if report.iterations >= settings.max_iter || !rn.is_finite() {
            return Err(Error::NewtonNotConverged {
                iterations: report.iterations,
                residual: rn,
            });
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        // superlinear forcing, but no tighter than the final tolerance needs
        let eta = settings.krylov_tol.max(rn.min(0.1)).max((1e-2 * settings.tol / rn).min(0.1));
        let delta = prob.solve_linearized(&x, &rhs, eta)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            let rt = prob.residual(&trial);
            let rtn = max_abs(&rt);
            if rtn.is_finite() && (rtn < rn || rtn <= settings.tol || lambda < 1e-6) {
                x = trial;
                r = rt;
                rn = rtn;
                break;
            }
            lambda *= settings.damping;
            if lambda < 1e-6 {
                // accept a tiny step rather than loop forever; the
                // iteration budget then reports the failure
                lambda = 0.0;
            }
        }
        report.iterations += 1;
        report.residuals.push(rn);
    }
    Ok((x, report))
}
