//! The operators `B`, `A = (1−Δ)⁻¹B` and their printed multiplier `m_A`.

use num_complex::Complex64;

use crate::spectral::{GridSpec, ScalarField, Spectrum, VectorField};

/// 3×3 complex matrix, row-major.
pub type Mat3 = [[Complex64; 3]; 3];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn mat_zero() -> Mat3 {
    [[ZERO; 3]; 3]
}

pub fn mat_identity() -> Mat3 {
    let mut m = mat_zero();
    for (a, row) in m.iter_mut().enumerate() {
        row[a] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = mat_zero();
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn mat_scale(a: &Mat3, s: f64) -> Mat3 {
    a.map(|row| row.map(|x| x * s))
}

pub fn mat_add(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] += b[i][j];
        }
    }
    c
}

pub fn mat_vec(a: &Mat3, v: &[Complex64; 3]) -> [Complex64; 3] {
    std::array::from_fn(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

pub fn frobenius(a: &Mat3) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value, from the eigenvalues of `AᴴA`.
pub fn operator_norm(a: &Mat3) -> f64 {
    let mut h = [[0.0f64; 3]; 3];
    let mut hi = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let s: Complex64 = (0..3).map(|k| a[k][i].conj() * a[k][j]).sum();
            h[i][j] = s.re;
            hi[i][j] = s.im;
        }
    }
    // Characteristic polynomial of the Hermitian AᴴA: λ³ − c2 λ² + c1 λ − c0.
    let c2 = h[0][0] + h[1][1] + h[2][2];
    let minor = |i: usize, j: usize| h[i][i] * h[j][j] - (h[i][j] * h[i][j] + hi[i][j] * hi[i][j]);
    let c1 = minor(0, 1) + minor(0, 2) + minor(1, 2);
    let hc = |i: usize, j: usize| Complex64::new(h[i][j], hi[i][j]);
    let det = hc(0, 0) * (hc(1, 1) * hc(2, 2) - hc(1, 2) * hc(2, 1)) - hc(0, 1) * (hc(1, 0) * hc(2, 2) - hc(1, 2) * hc(2, 0))
        + hc(0, 2) * (hc(1, 0) * hc(2, 1) - hc(1, 1) * hc(2, 0));
    let c0 = det.re;
    // Trigonometric solution for the largest root.
    let p = c2 / 3.0;
    let q = (c2 * c2 - 3.0 * c1).max(0.0) / 9.0;
    if q <= f64::EPSILON * p.abs().max(f64::MIN_POSITIVE) {
        return p.max(0.0).sqrt();
    }
    let r = (2.0 * c2 * c2 * c2 - 9.0 * c2 * c1 + 27.0 * c0) / 54.0;
    let theta = (r / q.powf(1.5)).clamp(-1.0, 1.0).acos();
    (p + 2.0 * q.sqrt() * (theta / 3.0).cos()).max(0.0).sqrt()
}

/// `m_A` entry for entry as printed, with prefactor `1/(1+|ξ|²)`.
pub fn multiplier_ma(xi: [f64; 3]) -> Mat3 {
    let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let pre = 1.0 / (1.0 + k2);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let first = if i == j { -3.0 * xi[i] } else { -xi[i] - xi[j] };
            Complex64::new(xi[i] * xi[j], first) * pre
        })
    })
}

/// The second-order part `ξξᵀ/(1+|ξ|²)` of `m_A`, the symbol of `(1−Δ)⁻¹(−∇div)`.
pub fn multiplier_ma_second_order(xi: [f64; 3]) -> Mat3 {
    let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let pre = 1.0 / (1.0 + k2);
    std::array::from_fn(|i| std::array::from_fn(|j| Complex64::new(xi[i] * xi[j] * pre, 0.0)))
}

/// Which part of the printed multiplier is used for `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AVariant {
    Printed,
    SecondOrderPart,
}

impl AVariant {
    pub fn name(self) -> &'static str {
        match self {
            AVariant::Printed => "printed",
            AVariant::SecondOrderPart => "second-order-part",
        }
    }

    pub fn multiplier(self, xi: [f64; 3]) -> Mat3 {
        match self {
            AVariant::Printed => multiplier_ma(xi),
            AVariant::SecondOrderPart => multiplier_ma_second_order(xi),
        }
    }
}

/// Signs relating the printed formulas to this crate's Fourier convention
/// `f = Σ c e^{iξ·x}` and to the flow-map right-hand side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conventions {
    /// The printed `m_A` is `(1+|ξ|²)⁻¹` times the symbol of `B` at `fourier_sign·ξ`.
    pub fourier_sign: f64,
    pub variant: AVariant,
    /// `∂_φ G = sigma_a · A_variant`.
    pub sigma_a: f64,
    /// `∂_ρ G = sigma_rho · (1−Δ)⁻¹∇`.
    pub sigma_rho: f64,
}

impl Conventions {
    /// Constants found by [`super::convention_gate`]; a test re-runs the gate
    /// and checks them.
    pub const RESOLVED: Conventions = Conventions {
        fourier_sign: -1.0,
        variant: AVariant::SecondOrderPart,
        sigma_a: -1.0,
        sigma_rho: -1.0,
    };

    /// Multiplier of `∂_φ G` at `(id, 1)` in this crate's convention.
    pub fn a_multiplier(&self, xi: [f64; 3]) -> Mat3 {
        let m = self.variant.multiplier(xi.map(|x| self.fourier_sign * x));
        mat_scale(&m, self.sigma_a)
    }

    /// Multiplier of `∂_ρ G`: `sigma_rho · iξ/(1+|ξ|²)`.
    pub fn rho_multiplier(&self, xi: [f64; 3]) -> [Complex64; 3] {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        xi.map(|x| Complex64::new(0.0, self.sigma_rho * x / (1.0 + k2)))
    }
}

/// Wavevector of a storage index with each Nyquist component zeroed, matching
/// the first-derivative symbols of [`Spectrum::derivative`].
pub fn symbol_wavevector(grid: &GridSpec, idx: usize) -> [f64; 3] {
    let (i, j, k) = grid.unindex(idx);
    let xi = grid.wavevector(idx);
    let ny = [i, j, k].map(|m| grid.is_nyquist(m));
    std::array::from_fn(|a| if ny[a] { 0.0 } else { xi[a] })
}

/// `ŵ(ξ) ↦ m(ξ) ŵ(ξ)` on every mode.
pub fn apply_multiplier<F: Fn([f64; 3]) -> Mat3>(w: &VectorField, m: F) -> VectorField {
    let g = *w.grid();
    let spec = w.spectra();
    let mut out = [Spectrum::zeros(g), Spectrum::zeros(g), Spectrum::zeros(g)];
    for idx in 0..g.len() {
        let mm = m(symbol_wavevector(&g, idx));
        let v = mat_vec(&mm, &[spec[0].data()[idx], spec[1].data()[idx], spec[2].data()[idx]]);
        for a in 0..3 {
            out[a].data_mut()[idx] = v[a];
        }
    }
    VectorField::from_spectra(out)
}

/// `B(w) = tr(dw)(1,1,1)ᵀ + dwᵀ(1,1,1)ᵀ + (∂₁w₁,∂₂w₂,∂₃w₃)ᵀ − ∇(div w)`.
pub fn apply_b(w: &VectorField) -> VectorField {
    let spec = w.spectra();
    // d[i][j] = ∂_j w_i
    let d: [[Spectrum; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| spec[i].derivative(j)));
    let g = *w.grid();
    let mut div = Spectrum::zeros(g);
    for (i, row) in d.iter().enumerate() {
        for (x, y) in div.data_mut().iter_mut().zip(row[i].data()) {
            *x += y;
        }
    }
    let comps: [Spectrum; 3] = std::array::from_fn(|i| {
        let grad_div = div.derivative(i);
        let mut out = div.clone();
        for idx in 0..g.len() {
            let row_sum = d[0][i].data()[idx] + d[1][i].data()[idx] + d[2][i].data()[idx];
            out.data_mut()[idx] += row_sum + d[i][i].data()[idx] - grad_div.data()[idx];
        }
        out
    });
    VectorField::from_spectra(comps)
}

/// `(1 − Δ)⁻¹` applied componentwise.
pub fn helmholtz_inverse(w: &VectorField) -> VectorField {
    VectorField::from_spectra(w.spectra().map(|s| s.scale_radial(|k2| 1.0 / (1.0 + k2))))
}

/// `A w = (1 − Δ)⁻¹ B w`.
pub fn apply_a(w: &VectorField) -> VectorField {
    helmholtz_inverse(&apply_b(w))
}

/// `(1 − Δ)⁻¹ ∇ρ̄`.
pub fn helmholtz_gradient(rho_bar: &ScalarField) -> VectorField {
    let s = rho_bar.spectrum();
    VectorField::from_spectra(std::array::from_fn(|a| s.derivative(a).scale_radial(|k2| 1.0 / (1.0 + k2))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn printed_multiplier_values() {
        assert_eq!(multiplier_ma([0.0; 3]), mat_zero());
        let m = multiplier_ma([1.0, 0.0, 0.0]);
        let want = [
            [c(0.5, -1.5), c(0.0, -0.5), c(0.0, -0.5)],
            [c(0.0, -0.5), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, -0.5), c(0.0, 0.0), c(0.0, 0.0)],
        ];
        assert_eq!(m, want);
    }

    #[test]
    fn b_on_sine() {
        let g = GridSpec::periodic(16).unwrap();
        let w = VectorField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        let b = apply_b(&w);
        let want = VectorField::from_fn(g, |x| [3.0 * x[0].cos() + x[0].sin(), x[0].cos(), x[0].cos()]);
        assert!(b.sub(&want).max_abs() < 1e-13);
        let a = apply_a(&w);
        assert!(a.sub(&want.scale(0.5)).max_abs() < 1e-13);
        assert_eq!(apply_b(&VectorField::constant(g, [1.0, -2.0, 0.5])).max_abs(), 0.0);
    }

    #[test]
    fn operator_norm_matches_known_cases() {
        assert!((operator_norm(&mat_identity()) - 1.0).abs() < 1e-15);
        let mut m = mat_zero();
        m[0][1] = c(0.0, 3.0);
        m[2][2] = c(-2.0, 0.0);
        assert!((operator_norm(&m) - 3.0).abs() < 1e-14);
        // rank one u vᴴ has norm |u||v|
        let u = [c(1.0, 1.0), c(0.0, 2.0), c(-1.0, 0.0)];
        let v = [c(0.5, 0.0), c(0.0, -1.0), c(2.0, 1.0)];
        let r: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| u[i] * v[j].conj()));
        let nu = u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((operator_norm(&r) - nu * nv).abs() < 1e-12);
    }
}
