//! Type-2 non-uniform FFT: evaluate a trigonometric polynomial at scattered points.
//!
//! Coefficients are deconvolved by the kernel transform, zero-padded onto a
//! two-times oversampled grid and transformed back; each point then gathers
//! a `w^3` stencil weighted by the "exponential of semicircle" kernel
//! `exp(β(√(1−z²) − 1))`.

use num_complex::Complex64;

use super::fft;
use super::grid::GridSpec;

const OVERSAMPLE: usize = 2;
pub const DEFAULT_WIDTH: usize = 14;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, `m >= 2`.
pub(crate) fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

#[derive(Clone, Debug)]
pub struct NufftPlan {
    grid: GridSpec,
    width: usize,
    beta: f64,
    fine: usize,
    /// Deconvolution factor per signed wavenumber, indexed by `k + n/2`.
    deconv: Vec<f64>,
}

impl NufftPlan {
    pub fn new(grid: GridSpec) -> Self {
        Self::with_width(grid, DEFAULT_WIDTH)
    }

    pub fn with_width(grid: GridSpec, width: usize) -> Self {
        let n = grid.n();
        let fine = OVERSAMPLE * n;
        let beta = 2.30 * width as f64;
        let h = 2.0 * std::f64::consts::PI / fine as f64;
        let alpha = width as f64 * h / 2.0;
        let (qx, qw) = gauss_legendre(4 * width + 40);
        let phi = |z: f64| (beta * ((1.0 - z * z).max(0.0).sqrt() - 1.0)).exp();
        let deconv = (0..=n)
            .map(|j| {
                let k = j as f64 - (n / 2) as f64;
                let mut acc = 0.0;
                for (z, wq) in qx.iter().zip(&qw) {
                    acc += wq * phi(*z) * (k * alpha * z).cos();
                }
                h / (alpha * acc)
            })
            .collect();
        Self {
            grid,
            width,
            beta,
            fine,
            deconv,
        }
    }

    fn factor(&self, k: i64) -> f64 {
        self.deconv[(k + (self.grid.n() / 2) as i64) as usize]
    }

    /// Fine-grid samples of `f + i g` for Hermitian spectra `f`, `g`.
    ///
    /// Nyquist planes are split evenly between `±n/2` so each part stays real.
    fn fine_grid(&self, a: &[Complex64], b: Option<&[Complex64]>) -> Vec<Complex64> {
        let g = self.grid;
        let n = g.n();
        let m = self.fine;
        let half = (n / 2) as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); m * m * m];
        for idx in 0..g.len() {
            let mut c = a[idx];
            if let Some(b) = b {
                c += Complex64::new(-b[idx].im, b[idx].re);
            }
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let k = g.wavenumbers(idx);
            let scale = self.factor(k[0]) * self.factor(k[1]) * self.factor(k[2]);
            let c = c * scale;
            let targets = |kd: i64| -> ([i64; 2], usize) {
                if kd == -half {
                    ([-half, half], 2)
                } else {
                    ([kd, kd], 1)
                }
            };
            let (tx, nx) = targets(k[0]);
            let (ty, ny) = targets(k[1]);
            let (tz, nz) = targets(k[2]);
            let share = c / (nx * ny * nz) as f64;
            let wrap = |kd: i64| kd.rem_euclid(m as i64) as usize;
            for &kz in &tz[..nz] {
                for &ky in &ty[..ny] {
                    for &kx in &tx[..nx] {
                        out[wrap(kx) + m * (wrap(ky) + m * wrap(kz))] += share;
                    }
                }
            }
        }
        fft::inverse_in_place(&mut out, m);
        out
    }

    /// Stencil start and weights along one axis for position `x`.
    #[inline]
    fn weights(&self, x: f64, w: &mut [f64]) -> usize {
        let m = self.fine as f64;
        let t = x / self.grid.length() * m;
        let half = self.width as f64 / 2.0;
        let j0 = (t - half).ceil();
        let inv_half = 1.0 / half;
        for (a, wa) in w.iter_mut().enumerate() {
            let z = (t - (j0 + a as f64)) * inv_half;
            let r = 1.0 - z * z;
            *wa = if r > 0.0 {
                (self.beta * (r.sqrt() - 1.0)).exp()
            } else {
                0.0
            };
        }
        (j0 as i64).rem_euclid(self.fine as i64) as usize
    }

    /// Evaluate several real fields (given by Hermitian spectra) at `points`.
    pub fn eval_many(&self, specs: &[&[Complex64]], points: &[[f64; 3]]) -> Vec<Vec<f64>> {
        let grids: Vec<Vec<Complex64>> = specs
            .chunks(2)
            .map(|ch| self.fine_grid(ch[0], ch.get(1).copied()))
            .collect();
        let m = self.fine;
        let w = self.width;
        let mut out = vec![vec![0.0; points.len()]; specs.len()];
        let mut wx = vec![0.0; w];
        let mut wy = vec![0.0; w];
        let mut wz = vec![0.0; w];
        let mut ix = vec![0usize; w];
        for (p, pt) in points.iter().enumerate() {
            let sx = self.weights(pt[0], &mut wx);
            let sy = self.weights(pt[1], &mut wy);
            let sz = self.weights(pt[2], &mut wz);
            for (a, v) in ix.iter_mut().enumerate() {
                *v = (sx + a) % m;
            }
            for (gi, fine) in grids.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..w {
                    let zoff = m * m * ((sz + c) % m);
                    let mut accy = Complex64::new(0.0, 0.0);
                    for b in 0..w {
                        let row = &fine[zoff + m * ((sy + b) % m)..][..m];
                        let mut accx = Complex64::new(0.0, 0.0);
                        for a in 0..w {
                            accx += row[ix[a]] * wx[a];
                        }
                        accy += accx * wy[b];
                    }
                    acc += accy * wz[c];
                }
                out[2 * gi][p] = acc.re;
                if 2 * gi + 1 < specs.len() {
                    out[2 * gi + 1][p] = acc.im;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let x12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((x12 - 2.0 / 13.0).abs() < 1e-14);
    }
}
