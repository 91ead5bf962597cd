//! Lagrangian flow-map ODE `φ̇ = v`, `v̇ = −(∇φ_pot)∘φ`.
//!
//! The potential is solved in label coordinates. With `F = I + dW`,
//! `J = det F` and `Φ = φ_pot∘φ`, the relation `e^φ − Δφ = ρ` pulls back to
//! `J e^Φ − Div(M ∇Φ) = ρ0` with `M = J F⁻¹F⁻ᵀ`, and `(∇φ_pot)∘φ = F⁻ᵀ∇Φ`.
//! No composition with `φ⁻¹` is needed inside a stage.

use num_complex::Complex64;

use super::eulerian::potential_energy_density;
use super::flowmap::{cofactor, density_from_flow, det_identity_plus_minus_one, displacement_gradient, identity_plus, pullback_vector};
use super::ops::SpectralOps;
use super::state::FlowMapState;
use crate::elliptic::krylov::{pcg, SpdSystem};
use crate::elliptic::newton::{newton_solve, NonlinearProblem};
use crate::elliptic::pb::MAX_KRYLOV;
use crate::elliptic::{grad_potential, DensityState, EllipticParams};
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, Method, ScalarField, VectorField};
use crate::sum::pairwise_sum_by;

#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianDerivative {
    pub w: VectorField,
    pub v: VectorField,
}

/// Nodal Jacobian data of `φ = id + W`.
pub(crate) struct LabelGeometry {
    pub jm1: Vec<f64>,
    pub j: Vec<f64>,
    /// `F⁻ᵀ = C / J`.
    pub finv_t: [[Vec<f64>; 3]; 3],
    /// Upper triangle of `M = CᵀC / J` in the order 00, 01, 02, 11, 12, 22.
    pub m: [Vec<f64>; 6],
}

const SYM: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl LabelGeometry {
    pub fn new(w: &VectorField) -> Self {
        let dw = displacement_gradient(w);
        let len = dw.len();
        let mut jm1 = vec![0.0; len];
        let mut j = vec![0.0; len];
        let mut finv_t: [[Vec<f64>; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; len]));
        let mut m: [Vec<f64>; 6] = std::array::from_fn(|_| vec![0.0; len]);
        for i in 0..len {
            let a = dw.at(i);
            let d = det_identity_plus_minus_one(&a);
            let jj = 1.0 + d;
            let c = cofactor(&identity_plus(&a));
            jm1[i] = d;
            j[i] = jj;
            for r in 0..3 {
                for s in 0..3 {
                    finv_t[r][s][i] = c[r][s] / jj;
                }
            }
            for (q, &(r, s)) in SYM.iter().enumerate() {
                m[q][i] = (c[0][r] * c[0][s] + c[1][r] * c[1][s] + c[2][r] * c[2][s]) / jj;
            }
        }
        Self { jm1, j, finv_t, m }
    }

    pub fn min_det(&self) -> f64 {
        1.0 + self.jm1.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[inline]
    fn m_at(&self, i: usize, r: usize, s: usize) -> f64 {
        let (r, s) = if r <= s { (r, s) } else { (s, r) };
        let q = match (r, s) {
            (0, 0) => 0,
            (0, 1) => 1,
            (0, 2) => 2,
            (1, 1) => 3,
            (1, 2) => 4,
            _ => 5,
        };
        self.m[q][i]
    }

    /// `Div(M ∇h)` from the spectrum of `h`.
    fn div_m_grad(&self, ops: &SpectralOps, hhat: &[Complex64]) -> Vec<f64> {
        let g = ops.grad(hhat);
        let len = hhat.len();
        let flux: [Vec<f64>; 3] = std::array::from_fn(|r| {
            (0..len)
                .map(|i| self.m_at(i, r, 0) * g[0][i] + self.m_at(i, r, 1) * g[1][i] + self.m_at(i, r, 2) * g[2][i])
                .collect()
        });
        ops.inverse(&ops.div_spectrum([&flux[0], &flux[1], &flux[2]]))
    }

    /// `F⁻ᵀ ∇h` at the nodes.
    fn pushed_gradient(&self, ops: &SpectralOps, hhat: &[Complex64]) -> [Vec<f64>; 3] {
        let g = ops.grad(hhat);
        let len = hhat.len();
        std::array::from_fn(|r| {
            (0..len)
                .map(|i| self.finv_t[r][0][i] * g[0][i] + self.finv_t[r][1][i] * g[1][i] + self.finv_t[r][2][i] * g[2][i])
                .collect()
        })
    }
}

/// `h ↦ w h − Div(M∇h)` preconditioned by `(c − μΔ)⁻¹`.
struct LabelOperator<'a> {
    ops: &'a SpectralOps,
    geom: &'a LabelGeometry,
    weight: Vec<f64>,
    shift: f64,
    diffusivity: f64,
}

impl SpdSystem for LabelOperator<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.geom.div_m_grad(self.ops, &self.ops.forward(x));
        (0..x.len()).map(|i| self.weight[i] * x[i] - d[i]).collect()
    }

    fn precondition(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let zhat: Vec<Complex64> = self
            .ops
            .forward(r)
            .iter()
            .zip(&self.ops.k2_grad)
            .map(|(c, k2)| c / (self.shift + self.diffusivity * k2))
            .collect();
        let z = self.ops.inverse(&zhat);
        let d = self.geom.div_m_grad(self.ops, &zhat);
        let az = (0..r.len()).map(|i| self.weight[i] * z[i] - d[i]).collect();
        (z, az)
    }
}

/// `J expm1(Φ) + (J − 1) − ρ̄0 − Div(M∇Φ) = 0`.
struct LabelProblem<'a> {
    ops: &'a SpectralOps,
    geom: &'a LabelGeometry,
    rho_bar0: &'a [f64],
    diffusivity: f64,
}

impl NonlinearProblem for LabelProblem<'_> {
    fn residual(&self, phi: &[f64]) -> Vec<f64> {
        let d = self.geom.div_m_grad(self.ops, &self.ops.forward(phi));
        let g = self.geom;
        (0..phi.len())
            .map(|i| g.j[i] * phi[i].exp_m1() + g.jm1[i] - self.rho_bar0[i] - d[i])
            .collect()
    }

    fn solve_linearized(&self, phi: &[f64], rhs: &[f64], rtol: f64) -> Result<Vec<f64>> {
        let weight: Vec<f64> = (0..phi.len()).map(|i| self.geom.j[i] * phi[i].exp()).collect();
        let shift = crate::sum::pairwise_sum(&weight) / weight.len() as f64;
        let op = LabelOperator {
            ops: self.ops,
            geom: self.geom,
            weight,
            shift,
            diffusivity: self.diffusivity,
        };
        Ok(pcg(&op, rhs, rtol, MAX_KRYLOV)?.0)
    }
}

/// Label-space potential `Φ = φ_pot∘φ`, nodal.
pub(crate) fn solve_label_potential(
    ops: &SpectralOps,
    geom: &LabelGeometry,
    rho0: &DensityState,
    params: &EllipticParams,
    guess: Option<Vec<f64>>,
) -> Result<Vec<f64>> {
    params.validate()?;
    let len = geom.j.len();
    let diffusivity = pairwise_sum_by(len, |i| geom.m[0][i] + geom.m[3][i] + geom.m[5][i]) / (3.0 * len as f64);
    let prob = LabelProblem {
        ops,
        geom,
        rho_bar0: rho0.rho_bar().values(),
        diffusivity,
    };
    let mut settings = params.newton();
    let initial = match guess {
        Some(g) => {
            settings.min_iter = 1;
            g
        }
        None => vec![rho0.rho_bar().mean().ln_1p(); len],
    };
    Ok(newton_solve(&prob, initial, &settings)?.0)
}

/// Per-stage evaluation shared by [`lagrangian_rhs`] and the integrator.
pub(crate) fn lagrangian_rhs_fast(
    ops: &SpectralOps,
    state: &FlowMapState,
    rho0: &DensityState,
    params: &EllipticParams,
    guess: Option<Vec<f64>>,
    floor: f64,
) -> Result<(LagrangianDerivative, Vec<f64>)> {
    let geom = LabelGeometry::new(&state.w);
    let min = geom.min_det();
    if !(min > floor) {
        return Err(Error::JacobianDegenerate { t: state.t, min_det: min });
    }
    let phi = solve_label_potential(ops, &geom, rho0, params, guess)?;
    let pg = geom.pushed_gradient(ops, &ops.forward(&phi));
    let g = *state.grid();
    let [a, b, c] = pg;
    let neg = |v: Vec<f64>| ScalarField::from_parts(g, v.into_iter().map(|x| -x).collect());
    let vdot = VectorField::from_comps([neg(a), neg(b), neg(c)]);
    Ok((
        LagrangianDerivative {
            w: state.v.clone(),
            v: vdot,
        },
        phi,
    ))
}

/// `(φ̇, v̇) = (v, −(∇φ_pot)∘φ)` with the potential solved in label space.
pub fn lagrangian_rhs(state: &FlowMapState, rho0: &DensityState, params: &EllipticParams) -> Result<LagrangianDerivative> {
    state.grid().check_same(rho0.grid(), "initial density")?;
    let ops = SpectralOps::new(state.grid());
    Ok(lagrangian_rhs_fast(&ops, state, rho0, params, None, 0.0)?.0)
}

/// Literal composition route: `v̇ = −pullback(grad_potential(density_from_flow(ρ0, φ)), φ)`.
///
/// Needs a flow-map inversion per call; kept as an oracle for the label route.
pub fn lagrangian_rhs_composed(
    state: &FlowMapState,
    rho0: &DensityState,
    params: &EllipticParams,
) -> Result<LagrangianDerivative> {
    let rho = density_from_flow(rho0, &state.w)?;
    let grad = grad_potential(&rho, params)?;
    let pulled = pullback_vector(&grad, &state.w, Method::Trig)?;
    Ok(LagrangianDerivative {
        w: state.v.clone(),
        v: pulled.scale(-1.0),
    })
}

/// `Φ = φ_pot∘φ` as a field.
pub fn label_potential(state: &FlowMapState, rho0: &DensityState, params: &EllipticParams) -> Result<ScalarField> {
    let ops = SpectralOps::new(state.grid());
    let geom = LabelGeometry::new(&state.w);
    ScalarField::new(*state.grid(), solve_label_potential(&ops, &geom, rho0, params, None)?)
}

/// Energy evaluated in label coordinates:
/// `∫ ½ρ0|v|² + [½|F⁻ᵀ∇Φ|² + (Φ − 1)e^Φ + 1] J dX`.
pub fn lagrangian_energy(state: &FlowMapState, rho0: &DensityState, params: &EllipticParams) -> Result<f64> {
    let g: GridSpec = *state.grid();
    let ops = SpectralOps::new(&g);
    let geom = LabelGeometry::new(&state.w);
    let phi = solve_label_potential(&ops, &geom, rho0, params, None)?;
    Ok(label_energy(&ops, &geom, state, rho0, &phi))
}

pub(crate) fn label_energy(
    ops: &SpectralOps,
    geom: &LabelGeometry,
    state: &FlowMapState,
    rho0: &DensityState,
    phi: &[f64],
) -> f64 {
    let g = *state.grid();
    let pg = geom.pushed_gradient(ops, &ops.forward(phi));
    let v2 = state.v.norm_squared();
    let r0 = rho0.rho_bar().values();
    pairwise_sum_by(g.len(), |i| {
        let e2 = pg[0][i] * pg[0][i] + pg[1][i] * pg[1][i] + pg[2][i] * pg[2][i];
        0.5 * (1.0 + r0[i]) * v2.values()[i] + (0.5 * e2 + potential_energy_density(phi[i])) * geom.j[i]
    }) * g.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::eulerian::eulerian_rhs;
    use crate::dynamics::state::EulerianState;

    fn grid(n: usize) -> GridSpec {
        GridSpec::periodic(n).unwrap()
    }

    #[test]
    fn equilibrium_and_translation() {
        let g = grid(8);
        let p = EllipticParams::default();
        let rho0 = DensityState::uniform(g);
        let d = lagrangian_rhs(&FlowMapState::identity(g), &rho0, &p).unwrap();
        assert_eq!(d.w.max_abs(), 0.0);
        assert!(d.v.max_abs() < 1e-15);
        let c = [0.2, -0.4, 0.1];
        let s = FlowMapState::at_rest_map(&VectorField::constant(g, c));
        let d = lagrangian_rhs(&s, &rho0, &p).unwrap();
        assert!(d.w.sub(&VectorField::constant(g, c)).max_abs() == 0.0);
        assert!(d.v.max_abs() < 1e-15);
    }

    #[test]
    fn identity_map_matches_eulerian_acceleration() {
        let g = grid(16);
        let p = EllipticParams::default();
        let rb = ScalarField::from_fn(g, |x| 0.1 * x[0].cos() + 0.05 * (x[1] + x[2]).sin());
        let rho0 = DensityState::new(rb.clone()).unwrap();
        let lag = lagrangian_rhs(&FlowMapState::identity(g), &rho0, &p).unwrap();
        let eul = eulerian_rhs(&EulerianState::new(rb, VectorField::zeros(g), 0.0).unwrap(), &p).unwrap();
        assert!(lag.v.sub(&eul.u).max_abs() < 1e-10);
    }

    #[test]
    fn label_route_matches_composition() {
        let g = grid(16);
        let p = EllipticParams::default();
        let rho0 = DensityState::new(ScalarField::from_fn(g, |x| 0.1 * x[0].cos() * x[2].sin())).unwrap();
        let w = VectorField::from_fn(g, |x| [0.05 * x[1].sin(), 0.04 * x[2].cos(), 0.03 * (x[0] + x[1]).sin()]);
        let s = FlowMapState::new(w, VectorField::zeros(g), 0.0).unwrap();
        let a = lagrangian_rhs(&s, &rho0, &p).unwrap();
        let b = lagrangian_rhs_composed(&s, &rho0, &p).unwrap();
        let err = a.v.sub(&b.v).max_abs();
        assert!(err < 1e-8, "label vs composed {err:e}");
    }

    #[test]
    fn label_energy_matches_eulerian_at_identity() {
        let g = grid(16);
        let p = EllipticParams::default();
        let rb = ScalarField::from_fn(g, |x| 0.2 * x[1].cos());
        let u = VectorField::from_fn(g, |x| [0.1 * x[2].sin(), 0.0, 0.1 * x[0].cos()]);
        let rho0 = DensityState::new(rb.clone()).unwrap();
        let el = lagrangian_energy(&FlowMapState::at_rest_map(&u), &rho0, &p).unwrap();
        let ee = super::super::eulerian::eulerian_energy(&EulerianState::new(rb, u, 0.0).unwrap(), &p).unwrap();
        assert!((el - ee).abs() < 1e-12 * ee.abs());
    }
}
