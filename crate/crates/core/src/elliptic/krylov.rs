//! Preconditioned conjugate gradients for symmetric positive operators.

use crate::error::{Error, Result};
use crate::sum::pairwise_sum_by;

/// A symmetric positive definite system with an SPD preconditioner.
pub trait SpdSystem {
    fn apply(&self, x: &[f64]) -> Vec<f64>;

    /// Returns `z = P⁻¹ r` together with `A z`.
    ///
    /// Implementations can usually form both from one spectral pass, which
    /// lets the solver update `A p` by recurrence instead of re-applying `A`.
    fn precondition(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>);
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// Relative residual `‖r_k‖₂ / ‖b‖₂` per iteration.
    pub trace: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum_by(a.len(), |i| a[i] * b[i])
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` from `x = 0` until `‖r‖₂ ≤ rtol ‖b‖₂`.
///
/// Fails if `max_iter` is reached or the residual stops improving for
/// eight consecutive iterations.
pub fn pcg<S: SpdSystem + ?Sized>(
    sys: &S,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, KrylovReport)> {
    let len = b.len();
    let bnorm = norm2(b);
    let mut report = KrylovReport::default();
    let mut x = vec![0.0; len];
    if bnorm == 0.0 {
        return Ok((x, report));
    }
    let mut r = b.to_vec();
    let (z, az) = sys.precondition(&r);
    let mut p = z.clone();
    let mut ap = az;
    let mut rz = dot(&r, &z);
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for it in 1..=max_iter {
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..len {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        report.iterations = it;
        report.trace.push(rel);
        if rel <= rtol {
            return Ok((x, report));
        }
        if rel < best * 0.999 {
            best = rel;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= 8 {
                break;
            }
        }
        let (z, az) = sys.precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            p[i] = z[i] + beta * p[i];
            ap[i] = az[i] + beta * ap[i];
        }
    }
    Err(Error::KrylovStagnation {
        iterations: report.iterations,
        trace: report.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diag(Vec<f64>);

    impl SpdSystem for Diag {
        fn apply(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.0).map(|(a, d)| a * d).collect()
        }
        fn precondition(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
            (r.to_vec(), self.apply(r))
        }
    }

    #[test]
    fn solves_diagonal_system() {
        let d = Diag((1..=50).map(|i| i as f64).collect());
        let b = vec![1.0; 50];
        let (x, rep) = pcg(&d, &b, 1e-13, 100).unwrap();
        for (i, xi) in x.iter().enumerate() {
            assert!((xi * (i + 1) as f64 - 1.0).abs() < 1e-11);
        }
        assert!(rep.iterations <= 50);
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let d = Diag(vec![2.0; 4]);
        let (x, rep) = pcg(&d, &[0.0; 4], 1e-13, 10).unwrap();
        assert_eq!(x, vec![0.0; 4]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn iteration_cap_reports_trace() {
        let d = Diag((1..=50).map(|i| (i * i) as f64).collect());
        let err = pcg(&d, &vec![1.0; 50], 1e-15, 3).unwrap_err();
        match err {
            Error::KrylovStagnation { iterations, trace } => {
                assert_eq!(iterations, 3);
                assert_eq!(trace.len(), 3);
            }
            e => panic!("unexpected {e}"),
        }
    }
}
