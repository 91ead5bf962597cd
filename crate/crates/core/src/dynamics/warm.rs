//! Potential history for warm-starting the elliptic solve across stages.

use std::collections::VecDeque;

const DEPTH: usize = 3;

#[derive(Clone, Debug, Default)]
pub(crate) struct PotentialHistory {
    entries: VecDeque<(f64, Vec<f64>)>,
}

impl PotentialHistory {
    /// Store `φ(t)`, replacing any entry at the same time up to rounding.
    pub fn record(&mut self, t: f64, phi: &[f64]) {
        let close = |s: f64| (s - t).abs() <= 1e-12 * t.abs().max(1.0);
        if let Some(e) = self.entries.iter_mut().find(|e| close(e.0)) {
            e.0 = t;
            e.1.copy_from_slice(phi);
            return;
        }
        if self.entries.len() == DEPTH {
            self.entries.pop_front();
        }
        self.entries.push_back((t, phi.to_vec()));
    }

    /// Lagrange extrapolation of the stored potentials to `t`.
    pub fn predict(&self, t: f64) -> Option<Vec<f64>> {
        let m = self.entries.len();
        if m == 0 {
            return None;
        }
        let len = self.entries[0].1.len();
        let mut out = vec![0.0; len];
        for (i, (ti, fi)) in self.entries.iter().enumerate() {
            let mut w = 1.0;
            for (j, (tj, _)) in self.entries.iter().enumerate() {
                if i != j {
                    w *= (t - tj) / (ti - tj);
                }
            }
            for (o, f) in out.iter_mut().zip(fi) {
                *o += w * f;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolates_quadratics_exactly() {
        let mut h = PotentialHistory::default();
        assert!(h.predict(0.0).is_none());
        let f = |t: f64| vec![1.0 + 2.0 * t - t * t, 3.0 * t * t];
        for t in [0.0, 0.1, 0.1, 0.2, 0.1 + 0.2, 0.3] {
            h.record(t, &f(t));
        }
        let p = h.predict(0.45).unwrap();
        let e = f(0.45);
        assert!((p[0] - e[0]).abs() < 1e-13 && (p[1] - e[1]).abs() < 1e-13);
        let mut h = PotentialHistory::default();
        h.record(1.0, &[5.0]);
        assert_eq!(h.predict(2.0).unwrap(), vec![5.0]);
    }
}
