//! Raw-buffer spectral kernels shared by the right-hand sides.

use num_complex::Complex64;

use crate::spectral::{fft, GridSpec};

pub(crate) struct SpectralOps {
    pub n: usize,
    /// `Σ ξ_a²` over the Nyquist-zeroed symbols, the symbol of `−div ∘ grad`.
    pub k2_grad: Vec<f64>,
    /// Derivative symbols with the Nyquist plane of each axis zeroed.
    pub xi: [Vec<f64>; 3],
    /// `|k_i| ≤ n/3` on every axis.
    pub keep: Vec<bool>,
}

impl SpectralOps {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        let cut = (n / 3) as i64;
        let len = grid.len();
        let mut xi = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut keep = vec![false; len];
        let kv = grid.axis_wavevectors();
        for idx in 0..len {
            let (i, j, k) = grid.unindex(idx);
            for (a, &ia) in [i, j, k].iter().enumerate() {
                xi[a][idx] = if grid.is_nyquist(ia) { 0.0 } else { kv[ia] };
            }
            keep[idx] = grid.wavenumbers(idx).iter().all(|m| m.abs() <= cut);
        }
        let k2_grad = (0..len).map(|i| xi[0][i] * xi[0][i] + xi[1][i] * xi[1][i] + xi[2][i] * xi[2][i]).collect();
        Self { n, k2_grad, xi, keep }
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        fft::forward_real(f, self.n)
    }

    pub fn forward3(&self, f: [&[f64]; 3]) -> [Vec<Complex64>; 3] {
        let mut it = fft::forward_real_many(&f, self.n).into_iter();
        [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
    }

    pub fn inverse3(&self, c: [&[Complex64]; 3]) -> [Vec<f64>; 3] {
        let mut it = fft::inverse_real_many(&c, self.n).into_iter();
        [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
    }

    pub fn inverse(&self, c: &[Complex64]) -> Vec<f64> {
        fft::inverse_real(c, self.n)
    }

    pub fn derivative(&self, c: &[Complex64], axis: usize) -> Vec<Complex64> {
        c.iter()
            .zip(&self.xi[axis])
            .map(|(c, &x)| Complex64::new(-x * c.im, x * c.re))
            .collect()
    }

    /// Nodal gradient of a spectrum.
    pub fn grad(&self, c: &[Complex64]) -> [Vec<f64>; 3] {
        let d: [Vec<Complex64>; 3] = std::array::from_fn(|a| self.derivative(c, a));
        self.inverse3([&d[0], &d[1], &d[2]])
    }

    /// Spectrum of `div f` for nodal components.
    pub fn div_spectrum(&self, f: [&[f64]; 3]) -> Vec<Complex64> {
        let s = self.forward3(f);
        (0..s[0].len())
            .map(|i| {
                let re = -(self.xi[0][i] * s[0][i].im + self.xi[1][i] * s[1][i].im + self.xi[2][i] * s[2][i].im);
                let im = self.xi[0][i] * s[0][i].re + self.xi[1][i] * s[1][i].re + self.xi[2][i] * s[2][i].re;
                Complex64::new(re, im)
            })
            .collect()
    }

    pub fn dealias_in_place(&self, c: &mut [Complex64]) {
        for (c, &k) in c.iter_mut().zip(&self.keep) {
            if !k {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }
}
