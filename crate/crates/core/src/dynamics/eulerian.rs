//! Eulerian form: `ρ̄_t = −div((1+ρ̄)u)`, `u_t = −(u·∇)u − ∇φ`.

use num_complex::Complex64;

use super::ops::SpectralOps;
use super::state::EulerianState;
use crate::elliptic::pb::solve_pb_nodal;
use crate::elliptic::{default_initial_guess, grad_potential, solve_poisson_boltzmann, DensityState, EllipticParams};
use crate::error::Result;
use crate::spectral::{calculus, ScalarField, VectorField};
use crate::sum::pairwise_sum_by;

#[derive(Clone, Debug, PartialEq)]
pub struct EulerianDerivative {
    pub rho_bar: ScalarField,
    pub u: VectorField,
}

/// Transport terms and the assembled derivative, given `∇φ` as spectra.
fn assemble(
    ops: &SpectralOps,
    state: &EulerianState,
    grad_phi: [Vec<Complex64>; 3],
    dealias: bool,
) -> EulerianDerivative {
    let g = *state.grid();
    let len = g.len();
    let u = &state.u;
    u.ensure_coeffs();
    let rho_bar = state.rho_bar.values();
    let flux: [Vec<f64>; 3] =
        std::array::from_fn(|a| (0..len).map(|i| (1.0 + rho_bar[i]) * u[a].values()[i]).collect());
    let mut drho = ops.div_spectrum([&flux[0], &flux[1], &flux[2]]);
    for c in &mut drho {
        *c = -*c;
    }

    let grads: [[Vec<f64>; 3]; 3] = std::array::from_fn(|a| ops.grad(u[a].coeffs()));
    let adv: [Vec<f64>; 3] = std::array::from_fn(|a| {
        (0..len)
            .map(|i| u[0].values()[i] * grads[a][0][i] + u[1].values()[i] * grads[a][1][i] + u[2].values()[i] * grads[a][2][i])
            .collect()
    });
    let adv_hat = ops.forward3([&adv[0], &adv[1], &adv[2]]);
    let mut du: [Vec<Complex64>; 3] =
        std::array::from_fn(|a| adv_hat[a].iter().zip(&grad_phi[a]).map(|(x, y)| -(x + y)).collect());
    if dealias {
        ops.dealias_in_place(&mut drho);
        for d in &mut du {
            ops.dealias_in_place(d);
        }
    }
    let vals = ops.inverse3([&du[0], &du[1], &du[2]]);
    let [a, b, c] = du;
    let [va, vb, vc] = vals;
    let rho_vals = ops.inverse(&drho);
    EulerianDerivative {
        rho_bar: ScalarField::with_coeffs(g, rho_vals, drho),
        u: VectorField::from_comps([
            ScalarField::with_coeffs(g, va, a),
            ScalarField::with_coeffs(g, vb, b),
            ScalarField::with_coeffs(g, vc, c),
        ]),
    }
}

/// Time derivative of the Eulerian state with dealiased stage products and
/// the cross-checked potential gradient.
pub fn eulerian_rhs(state: &EulerianState, params: &EllipticParams) -> Result<EulerianDerivative> {
    eulerian_rhs_with(state, params, true)
}

/// As [`eulerian_rhs`], with dealiasing switchable.
pub fn eulerian_rhs_with(state: &EulerianState, params: &EllipticParams, dealias: bool) -> Result<EulerianDerivative> {
    let rho = state.density()?;
    let ops = SpectralOps::new(state.grid());
    let grad = grad_potential(&rho, params)?;
    grad.ensure_coeffs();
    let gp = std::array::from_fn(|a| grad[a].coeffs().to_vec());
    Ok(assemble(&ops, state, gp, dealias))
}

/// Fast path for the integrator: unchecked gradient, caller-supplied guess.
///
/// Returns the derivative and the nodal potential.
pub(crate) fn eulerian_rhs_fast(
    ops: &SpectralOps,
    state: &EulerianState,
    params: &EllipticParams,
    dealias: bool,
    guess: Option<Vec<f64>>,
) -> Result<(EulerianDerivative, Vec<f64>)> {
    let rho = state.density()?;
    let mut settings = params.newton();
    let initial = match guess {
        Some(g) => {
            settings.min_iter = 1;
            g
        }
        None => default_initial_guess(&rho).into_values(),
    };
    let (phi, _) = solve_pb_nodal(&rho, &settings, initial)?;
    let phat = ops.forward(&phi);
    let gp = std::array::from_fn(|a| ops.derivative(&phat, a));
    Ok((assemble(ops, state, gp, dealias), phi))
}

/// `(φ − 1)e^φ + 1`; the Taylor series `Σ (k−1)φ^k/k!` is used near zero.
#[inline]
pub(crate) fn potential_energy_density(phi: f64) -> f64 {
    if phi.abs() >= 0.5 {
        return (phi - 1.0) * phi.exp() + 1.0;
    }
    let mut term = phi; // φ^k / k!
    let mut sum = 0.0;
    for k in 2..30 {
        term *= phi / k as f64;
        sum += (k - 1) as f64 * term;
    }
    sum
}

/// `∫ ½ρ|u|² + ½|∇φ|² + (φ − 1)e^φ + 1` for a known potential.
pub fn eulerian_energy_with(state: &EulerianState, phi: &ScalarField) -> f64 {
    let g = *state.grid();
    let grad = calculus::gradient(phi);
    let u2 = state.u.norm_squared();
    let g2 = grad.norm_squared();
    let rho = state.rho_bar.values();
    let p = phi.values();
    pairwise_sum_by(g.len(), |i| {
        0.5 * (1.0 + rho[i]) * u2.values()[i] + 0.5 * g2.values()[i] + potential_energy_density(p[i])
    }) * g.cell_volume()
}

/// Energy of an Eulerian state; solves for the potential.
pub fn eulerian_energy(state: &EulerianState, params: &EllipticParams) -> Result<f64> {
    let phi = solve_poisson_boltzmann(&state.density()?, params)?;
    Ok(eulerian_energy_with(state, &phi))
}

/// `∫ρ`.
pub fn mass(rho: &DensityState) -> f64 {
    let g = rho.grid();
    g.volume() + rho.rho_bar().integral()
}
