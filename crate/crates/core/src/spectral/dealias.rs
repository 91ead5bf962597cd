use num_complex::Complex64;

use super::field::{ScalarField, Spectrum, VectorField};

/// Two-thirds rule: zero every mode with some `|k_i| > n/3`.
pub fn dealias(spec: Spectrum) -> Spectrum {
    let g = *spec.grid();
    let cut = (g.n() / 3) as i64;
    spec.map_modes(|_, idx, c| {
        let k = g.wavenumbers(idx);
        if k.iter().any(|&ki| ki.abs() > cut) {
            Complex64::new(0.0, 0.0)
        } else {
            c
        }
    })
}

pub fn dealias_field(f: &ScalarField) -> ScalarField {
    dealias(f.spectrum()).to_field()
}

pub fn dealias_vector(u: &VectorField) -> VectorField {
    VectorField::from_spectra(u.spectra().map(dealias))
}

/// Number of modes retained by [`dealias`].
pub fn surviving_modes(n: usize) -> usize {
    (2 * (n / 3) + 1).pow(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::GridSpec;

    #[test]
    fn white_spectrum_count() {
        for n in [8, 12, 16, 32] {
            let g = GridSpec::periodic(n).unwrap();
            let s = Spectrum::new(g, vec![Complex64::new(1.0, 0.5); g.len()]).unwrap();
            let kept = dealias(s).data().iter().filter(|c| c.norm() > 0.0).count();
            assert_eq!(kept, surviving_modes(n));
        }
    }

    #[test]
    fn idempotent_and_preserves_truncated() {
        let g = GridSpec::periodic(16).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin() + (2.0 * x[1]).cos() * x[2].sin());
        let once = dealias(f.spectrum());
        assert_eq!(dealias(once.clone()), once);
        for (a, b) in once.data().iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
