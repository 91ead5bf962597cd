//! Exact spectral differentiation of trigonometric interpolants.

use super::field::{ScalarField, Spectrum, VectorField};

/// `∇f`.
pub fn gradient(f: &ScalarField) -> VectorField {
    let s = f.spectrum();
    VectorField::from_spectra([s.derivative(0), s.derivative(1), s.derivative(2)])
}

/// `div u`.
pub fn divergence(u: &VectorField) -> ScalarField {
    divergence_spectrum(u).to_field()
}

pub(crate) fn divergence_spectrum(u: &VectorField) -> Spectrum {
    let [a, b, c] = u.spectra();
    let mut out = a.derivative(0);
    let db = b.derivative(1);
    let dc = c.derivative(2);
    for ((o, x), y) in out.data_mut().iter_mut().zip(db.data()).zip(dc.data()) {
        *o += x + y;
    }
    out
}

/// `curl u`.
pub fn curl(u: &VectorField) -> VectorField {
    let [a, b, c] = u.spectra();
    let diff = |p: Spectrum, q: Spectrum| {
        let mut p = p;
        for (x, y) in p.data_mut().iter_mut().zip(q.data()) {
            *x -= y;
        }
        p
    };
    VectorField::from_spectra([
        diff(c.derivative(1), b.derivative(2)),
        diff(a.derivative(2), c.derivative(0)),
        diff(b.derivative(0), a.derivative(1)),
    ])
}

/// Jacobian matrix field `J[a][b] = ∂_b u_a`.
pub fn jacobian(u: &VectorField) -> [[ScalarField; 3]; 3] {
    let specs = u.spectra();
    let grads: Vec<VectorField> = specs
        .iter()
        .map(|s| VectorField::from_spectra([s.derivative(0), s.derivative(1), s.derivative(2)]))
        .collect();
    let mut it = grads.into_iter().map(|g| g.into_comps());
    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
}

/// `Δf`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    f.spectrum().scale_radial(|k2| -k2).to_field()
}

/// `(c - Δ)^{-1} f` for `c > 0`.
pub fn inverse_helmholtz(f: &ScalarField, c: f64) -> ScalarField {
    f.spectrum().scale_radial(|k2| 1.0 / (c + k2)).to_field()
}

/// `(u·∇) f` for a vector field `u` and scalar `f`, formed nodally.
pub fn advect_scalar(u: &VectorField, grad_f: &VectorField) -> ScalarField {
    let n = u.grid().len();
    let vals = (0..n)
        .map(|i| {
            u[0].values()[i] * grad_f[0].values()[i]
                + u[1].values()[i] * grad_f[1].values()[i]
                + u[2].values()[i] * grad_f[2].values()[i]
        })
        .collect();
    ScalarField::from_parts(*u.grid(), vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::GridSpec;

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.sub(b).max_abs()
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = GridSpec::periodic(16).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin() * x[1].cos());
        assert!(curl(&gradient(&f)).max_abs() < 1e-12);
    }

    #[test]
    fn divergence_of_curl_vanishes() {
        let g = GridSpec::new(16, 3.0).unwrap();
        let u = VectorField::from_fn(g, |x| {
            let k = 2.0 * std::f64::consts::PI / 3.0;
            [
                (k * x[1]).sin() * (2.0 * k * x[2]).cos(),
                (k * (x[0] + x[2])).cos(),
                (3.0 * k * x[0]).sin() * (k * x[1]).sin(),
            ]
        });
        assert!(divergence(&curl(&u)).max_abs() < 1e-12);
    }

    #[test]
    fn curl_of_shear() {
        let g = GridSpec::periodic(16).unwrap();
        let u = VectorField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
        let w = curl(&u);
        let expect = ScalarField::from_fn(g, |x| -x[1].cos());
        assert!(w[0].max_abs() < 1e-13);
        assert!(w[1].max_abs() < 1e-13);
        assert!(max_diff(&w[2], &expect) < 1e-13);
    }

    #[test]
    fn jacobian_layout() {
        let g = GridSpec::periodic(8).unwrap();
        let u = VectorField::from_fn(g, |x| [x[1].sin(), 0.0, (2.0 * x[0]).cos()]);
        let j = jacobian(&u);
        let d01 = ScalarField::from_fn(g, |x| x[1].cos());
        let d20 = ScalarField::from_fn(g, |x| -2.0 * (2.0 * x[0]).sin());
        assert!(max_diff(&j[0][1], &d01) < 1e-13);
        assert!(max_diff(&j[2][0], &d20) < 1e-13);
        assert!(j[0][0].max_abs() < 1e-13);
    }

    #[test]
    fn laplacian_and_helmholtz() {
        let g = GridSpec::periodic(8).unwrap();
        let f = ScalarField::from_fn(g, |x| (2.0 * x[0]).cos() * x[2].sin());
        let lf = laplacian(&f);
        assert!(max_diff(&lf, &f.scale(-5.0)) < 1e-12);
        let h = inverse_helmholtz(&f, 1.0);
        assert!(max_diff(&h, &f.scale(1.0 / 6.0)) < 1e-14);
    }

    #[test]
    fn nyquist_mode_has_zero_odd_derivative() {
        let g = GridSpec::periodic(8).unwrap();
        let f = ScalarField::from_fn(g, |x| (4.0 * x[0]).cos());
        assert!(gradient(&f).max_abs() < 1e-13);
        assert!(max_diff(&laplacian(&f), &f.scale(-16.0)) < 1e-12);
    }
}
