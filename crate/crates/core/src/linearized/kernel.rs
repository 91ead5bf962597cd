//! Kernels `K = Σ T^{2k+1}/(2k+1)! A^k`, `K̃ = Σ T^{2k+2}/(2k+2)! A^k` and the
//! Duhamel formula for `∂φ(T)`.

use num_complex::Complex64;

use super::operators::{mat_add, mat_identity, mat_mul, mat_scale, mat_vec, frobenius, operator_norm, Conventions, Mat3};
use super::operators::symbol_wavevector;
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, ScalarField, Spectrum, VectorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesParams {
    pub truncation_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesParams {
    fn default() -> Self {
        Self {
            truncation_tol: 1e-14,
            max_terms: 60,
        }
    }
}

impl SeriesParams {
    pub fn validate(&self) -> Result<()> {
        if self.truncation_tol > 0.0 && self.max_terms > 0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("series parameters {self:?}")))
        }
    }
}

/// A summed series and its truncation record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSum {
    pub value: Mat3,
    /// Terms summed, `k = 0 .. terms`.
    pub terms: usize,
    /// Bound on the neglected tail from the factorial ratio.
    pub tail_bound: f64,
}

/// `Σ_k T^{2k+p}/(2k+p)! a^k` for `p ∈ {1, 2}`, stopped once a term's
/// Frobenius norm drops below `truncation_tol`.
pub fn matrix_series(a: &Mat3, t: f64, p: usize, params: &SeriesParams) -> Result<SeriesSum> {
    params.validate()?;
    let norm_a = operator_norm(a);
    let mut coef = t.powi(p as i32) / (1..=p).product::<usize>() as f64;
    let mut power = mat_identity();
    let mut sum = mat_scale(&power, coef);
    let mut last = coef * frobenius(&power);
    for k in 1..=params.max_terms {
        if last < params.truncation_tol {
            // term_{j+1}/term_j ≤ T²‖a‖/((2j+p+1)(2j+p+2)), decreasing in j
            let m = (2 * k + p - 2) as f64;
            let r = t * t * norm_a / ((m + 1.0) * (m + 2.0));
            let tail_bound = if r < 1.0 { last * r / (1.0 - r) } else { f64::INFINITY };
            return Ok(SeriesSum {
                value: sum,
                terms: k,
                tail_bound,
            });
        }
        let m = (2 * k + p) as f64;
        coef *= t * t / ((m - 1.0) * m);
        power = mat_mul(&power, a);
        let term = mat_scale(&power, coef);
        last = frobenius(&term);
        sum = mat_add(&sum, &term);
    }
    Err(Error::SeriesNotConverged {
        max_terms: params.max_terms,
        last_term: last,
    })
}

/// Smallest `k` with `T^{2k+1}/(2k+1)! · bound^k < tol`: where the series
/// for `K` may stop when `‖m_A‖ ≤ bound`.
pub fn factorial_tail_index(t: f64, bound: f64, tol: f64) -> usize {
    let mut term = t;
    let mut k = 0;
    while term >= tol {
        k += 1;
        let m = (2 * k + 1) as f64;
        term *= t * t * bound / ((m - 1.0) * m);
    }
    k
}

/// `K(ξ)` with the resolved conventions.
pub fn kernel_k(t: f64, xi: [f64; 3], params: &SeriesParams) -> Result<SeriesSum> {
    check_time(t)?;
    matrix_series(&Conventions::RESOLVED.a_multiplier(xi), t, 1, params)
}

/// `K̃(ξ)` with the resolved conventions.
pub fn kernel_ktilde(t: f64, xi: [f64; 3], params: &SeriesParams) -> Result<SeriesSum> {
    check_time(t)?;
    matrix_series(&Conventions::RESOLVED.a_multiplier(xi), t, 2, params)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("kernel time must be positive, got {t}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelLabel {
    MA,
    K,
    KTilde,
    /// `(1+|ξ|²)⁻¹ Id`.
    Helmholtz,
}

/// A matrix Fourier multiplier `ξ ↦ 3×3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierKernel {
    pub label: KernelLabel,
    pub t: f64,
    pub conventions: Conventions,
    pub series: SeriesParams,
}

impl MultiplierKernel {
    pub fn new(label: KernelLabel, t: f64) -> Self {
        Self {
            label,
            t,
            conventions: Conventions::RESOLVED,
            series: SeriesParams::default(),
        }
    }

    pub fn eval(&self, xi: [f64; 3]) -> Result<Mat3> {
        let a = || self.conventions.a_multiplier(xi);
        Ok(match self.label {
            KernelLabel::MA => a(),
            KernelLabel::K => {
                check_time(self.t)?;
                matrix_series(&a(), self.t, 1, &self.series)?.value
            }
            KernelLabel::KTilde => {
                check_time(self.t)?;
                matrix_series(&a(), self.t, 2, &self.series)?.value
            }
            KernelLabel::Helmholtz => {
                let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                mat_scale(&mat_identity(), 1.0 / (1.0 + k2))
            }
        })
    }

    /// `sup ‖eval(ξ)‖` over the grid wavevectors.
    pub fn sup_norm(&self, grid: &GridSpec) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for idx in 0..grid.len() {
            sup = sup.max(operator_norm(&self.eval(symbol_wavevector(grid, idx))?));
        }
        Ok(sup)
    }

    /// `max ‖eval(−ξ) − conj eval(ξ)‖` over the grid wavevectors.
    pub fn reality_defect(&self, grid: &GridSpec) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for idx in 0..grid.len() {
            let xi = symbol_wavevector(grid, idx);
            let p = self.eval(xi)?;
            let m = self.eval(xi.map(|x| -x))?;
            let d: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] - p[i][j].conj()));
            worst = worst.max(frobenius(&d));
        }
        Ok(worst)
    }

    pub fn apply(&self, w: &VectorField) -> Result<VectorField> {
        let g = *w.grid();
        let spec = w.spectra();
        let mut out = [Spectrum::zeros(g), Spectrum::zeros(g), Spectrum::zeros(g)];
        for idx in 0..g.len() {
            let m = self.eval(symbol_wavevector(&g, idx))?;
            let v = mat_vec(&m, &[spec[0].data()[idx], spec[1].data()[idx], spec[2].data()[idx]]);
            for a in 0..3 {
                out[a].data_mut()[idx] = v[a];
            }
        }
        Ok(VectorField::from_spectra(out))
    }
}

/// `∂φ(T) = K ū + K̃ ∂_ρG(ρ̄)`, summed per mode.
pub fn linearized_flow_derivative(u_bar: &VectorField, rho_bar: &ScalarField, t: f64, params: &SeriesParams) -> Result<VectorField> {
    u_bar.grid().check_same(rho_bar.grid(), "linearization density")?;
    check_time(t)?;
    let conv = Conventions::RESOLVED;
    let g = *u_bar.grid();
    let us = u_bar.spectra();
    let rs = rho_bar.spectrum();
    let mut out = [Spectrum::zeros(g), Spectrum::zeros(g), Spectrum::zeros(g)];
    for idx in 0..g.len() {
        let xi = symbol_wavevector(&g, idx);
        let a = conv.a_multiplier(xi);
        let k = matrix_series(&a, t, 1, params)?.value;
        let kt = matrix_series(&a, t, 2, params)?.value;
        let r = rs.data()[idx];
        let forcing: [Complex64; 3] = conv.rho_multiplier(xi).map(|m| m * r);
        let ku = mat_vec(&k, &[us[0].data()[idx], us[1].data()[idx], us[2].data()[idx]]);
        let kf = mat_vec(&kt, &forcing);
        for c in 0..3 {
            out[c].data_mut()[idx] = ku[c] + kf[c];
        }
    }
    Ok(VectorField::from_spectra(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::operators::mat_zero;

    #[test]
    fn kernels_at_zero() {
        let p = SeriesParams::default();
        let t = 0.8;
        let k = kernel_k(t, [0.0; 3], &p).unwrap();
        assert_eq!(k.value, mat_scale(&mat_identity(), t));
        let kt = kernel_ktilde(t, [0.0; 3], &p).unwrap();
        assert_eq!(kt.value, mat_scale(&mat_identity(), t * t / 2.0));
    }

    #[test]
    fn scalar_series_is_sinh() {
        // a = λ Id: K = sinh(√λ T)/√λ, K̃ = (cosh(√λ T) − 1)/λ
        let lam = 0.7;
        let a = mat_scale(&mat_identity(), lam);
        let t = 1.3;
        let p = SeriesParams::default();
        let k = matrix_series(&a, t, 1, &p).unwrap();
        let want = (lam.sqrt() * t).sinh() / lam.sqrt();
        assert!((k.value[0][0].re - want).abs() < 1e-14);
        assert!(k.tail_bound < 1e-14);
        let kt = matrix_series(&a, t, 2, &p).unwrap();
        assert!((kt.value[1][1].re - ((lam.sqrt() * t).cosh() - 1.0) / lam).abs() < 1e-14);
        assert_eq!(k.value[0][1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn divergent_budget_is_reported() {
        let a = mat_scale(&mat_identity(), 1e6);
        let p = SeriesParams {
            truncation_tol: 1e-14,
            max_terms: 5,
        };
        assert!(matches!(matrix_series(&a, 1.0, 1, &p), Err(Error::SeriesNotConverged { .. })));
        assert!(kernel_k(0.0, [0.0; 3], &p).is_err());
    }

    #[test]
    fn tail_index_for_bound_three() {
        // 3^k/(2k+1)!: 1.8e-11 at k=8, 1.6e-13 at k=9, 1.2e-15 at k=10
        assert_eq!(factorial_tail_index(1.0, 3.0, 1e-14), 10);
        assert_eq!(factorial_tail_index(1.0, 0.0, 1e-14), 1);
    }

    #[test]
    fn constant_velocity_translates() {
        let g = GridSpec::periodic(8).unwrap();
        let c = [0.2, -0.1, 0.4];
        let t = 0.6;
        let d = linearized_flow_derivative(&VectorField::constant(g, c), &ScalarField::zeros(g), t, &SeriesParams::default())
            .unwrap();
        assert!(d.sub(&VectorField::constant(g, c.map(|v| v * t))).max_abs() < 1e-15);
        let d = linearized_flow_derivative(&VectorField::zeros(g), &ScalarField::constant(g, 0.3), t, &SeriesParams::default())
            .unwrap();
        assert_eq!(d.max_abs(), 0.0);
        assert_eq!(MultiplierKernel::new(KernelLabel::MA, t).eval([0.0; 3]).unwrap(), mat_zero());
    }
}
