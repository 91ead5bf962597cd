use super::field::{ScalarField, Spectrum, VectorField};
use crate::error::{Error, Result};
use crate::sum::pairwise_sum_by;

fn check_s(s: f64) -> Result<()> {
    if s.is_finite() && s >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeSobolevIndex(s))
    }
}

/// `Σ (1+|ξ|²)^s |c(ξ)|² V` over a spectrum.
pub fn sobolev_norm_squared_spectrum(spec: &Spectrum, s: f64) -> Result<f64> {
    check_s(s)?;
    let g = *spec.grid();
    let d = spec.data();
    let sum = pairwise_sum_by(d.len(), |idx| {
        let xi = g.wavevector(idx);
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        (1.0 + k2).powf(s) * d[idx].norm_sqr()
    });
    Ok(sum * g.volume())
}

pub fn sobolev_norm_scalar(f: &ScalarField, s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(sobolev_norm_squared_spectrum(&f.spectrum(), s)?.sqrt())
}

/// Root-sum-square of the component norms.
pub fn sobolev_norm_vector(u: &VectorField, s: f64) -> Result<f64> {
    check_s(s)?;
    u.ensure_coeffs();
    let mut acc = 0.0;
    for a in 0..3 {
        acc += sobolev_norm_squared_spectrum(&u[a].spectrum(), s)?;
    }
    Ok(acc.sqrt())
}

/// Anything with a spectral Sobolev norm.
pub trait SobolevNorm {
    fn sobolev_norm(&self, s: f64) -> Result<f64>;
}

impl SobolevNorm for ScalarField {
    fn sobolev_norm(&self, s: f64) -> Result<f64> {
        sobolev_norm_scalar(self, s)
    }
}

impl SobolevNorm for VectorField {
    fn sobolev_norm(&self, s: f64) -> Result<f64> {
        sobolev_norm_vector(self, s)
    }
}

pub fn sobolev_norm<F: SobolevNorm + ?Sized>(f: &F, s: f64) -> Result<f64> {
    f.sobolev_norm(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::GridSpec;
    use std::f64::consts::PI;

    #[test]
    fn trivial_norms() {
        let g = GridSpec::periodic(8).unwrap();
        assert_eq!(sobolev_norm(&ScalarField::zeros(g), 3.0).unwrap(), 0.0);
        let c = sobolev_norm(&ScalarField::constant(g, -2.0), 3.0).unwrap();
        assert!((c - 2.0 * (2.0 * PI).powf(1.5)).abs() < 1e-12);
        assert!(matches!(
            sobolev_norm(&ScalarField::zeros(g), -0.5),
            Err(Error::NegativeSobolevIndex(_))
        ));
    }

    #[test]
    fn sine_norm_matches_hand_value() {
        let g = GridSpec::periodic(16).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin());
        let v = sobolev_norm(&f, 3.0).unwrap();
        let expect = 2.0 * (2.0 * PI).powf(1.5);
        assert!((v - expect).abs() / expect < 1e-14);
    }

    #[test]
    fn vector_norm_is_root_sum_square() {
        let g = GridSpec::periodic(8).unwrap();
        let u = VectorField::from_fn(g, |x| [x[0].sin(), 1.0, 0.0]);
        let a = sobolev_norm(&u[0], 3.0).unwrap();
        let b = sobolev_norm(&u[1], 3.0).unwrap();
        let v = sobolev_norm(&u, 3.0).unwrap();
        assert!((v - (a * a + b * b).sqrt()).abs() < 1e-13);
    }
}
