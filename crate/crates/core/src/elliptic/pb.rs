//! Poisson-Boltzmann solves `e^φ − Δφ = ρ` on the periodic box.

use num_complex::Complex64;

use super::krylov::{pcg, SpdSystem};
use super::newton::{newton_solve, NewtonReport, NewtonSettings, NonlinearProblem};
use crate::error::{Error, Result};
use crate::spectral::{calculus, fft, GridSpec, ScalarField, VectorField};
use crate::sum::max_abs;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticParams {
    pub newton_tol: f64,
    pub max_newton: usize,
    pub krylov_tol: f64,
    pub damping: f64,
}

impl Default for EllipticParams {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            max_newton: 50,
            krylov_tol: 1e-13,
            damping: 0.5,
        }
    }
}

impl EllipticParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.newton_tol > 0.0
            && self.krylov_tol > 0.0
            && self.max_newton >= 1
            && self.damping > 0.0
            && self.damping < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("elliptic parameters {self:?}")))
        }
    }

    pub(crate) fn newton(&self) -> NewtonSettings {
        NewtonSettings {
            tol: self.newton_tol,
            max_iter: self.max_newton,
            krylov_tol: self.krylov_tol,
            damping: self.damping,
            min_iter: 0,
        }
    }
}

/// Iteration cap for each Krylov solve.
pub(crate) const MAX_KRYLOV: usize = 400;

/// Ion density `ρ = 1 + ρ̄`, positive at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    rho_bar: ScalarField,
}

impl DensityState {
    pub fn new(rho_bar: ScalarField) -> Result<Self> {
        let (index, min) = rho_bar
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
        if !(1.0 + min > 0.0) {
            return Err(Error::NonPositiveDensity { min: 1.0 + min, index });
        }
        Ok(Self { rho_bar })
    }

    pub fn uniform(grid: GridSpec) -> Self {
        Self {
            rho_bar: ScalarField::zeros(grid),
        }
    }

    pub fn rho_bar(&self) -> &ScalarField {
        &self.rho_bar
    }

    pub fn grid(&self) -> &GridSpec {
        self.rho_bar.grid()
    }

    /// `ρ = 1 + ρ̄`.
    pub fn rho(&self) -> ScalarField {
        self.rho_bar.map(|v| 1.0 + v)
    }
}

/// `h ↦ w h − Δh` with `(c − Δ)⁻¹` preconditioning.
pub(crate) struct ScreenedOperator {
    grid: GridSpec,
    weight: Vec<f64>,
    shift: f64,
    k2: Vec<f64>,
}

pub(crate) fn radial_symbol(grid: &GridSpec) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| {
            let xi = grid.wavevector(idx);
            xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
        })
        .collect()
}

impl ScreenedOperator {
    pub(crate) fn new(grid: GridSpec, weight: Vec<f64>) -> Self {
        let shift = crate::sum::pairwise_sum(&weight) / weight.len() as f64;
        Self {
            k2: radial_symbol(&grid),
            grid,
            weight,
            shift,
        }
    }
}

impl SpdSystem for ScreenedOperator {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        let mut c = fft::forward_real(x, n);
        for (ci, k2) in c.iter_mut().zip(&self.k2) {
            *ci *= *k2;
        }
        let minus_lap = fft::inverse_real(&c, n);
        (0..x.len()).map(|i| self.weight[i] * x[i] + minus_lap[i]).collect()
    }

    fn precondition(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n();
        let c = fft::forward_real(r, n);
        let z: Vec<Complex64> = c.iter().zip(&self.k2).map(|(c, k2)| c / (self.shift + k2)).collect();
        let lz: Vec<Complex64> = z.iter().zip(&self.k2).map(|(z, k2)| z * *k2).collect();
        let (z, minus_lap) = fft::inverse_real_pair(&z, &lz, n);
        let az = (0..r.len()).map(|i| self.weight[i] * z[i] + minus_lap[i]).collect();
        (z, az)
    }
}

/// `expm1(φ) − Δφ − ρ̄ = 0`.
struct PbProblem<'a> {
    grid: GridSpec,
    rho_bar: &'a [f64],
    k2: Vec<f64>,
}

impl NonlinearProblem for PbProblem<'_> {
    fn residual(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        let mut c = fft::forward_real(phi, n);
        for (ci, k2) in c.iter_mut().zip(&self.k2) {
            *ci *= *k2;
        }
        let minus_lap = fft::inverse_real(&c, n);
        (0..phi.len())
            .map(|i| phi[i].exp_m1() + minus_lap[i] - self.rho_bar[i])
            .collect()
    }

    fn solve_linearized(&self, phi: &[f64], rhs: &[f64], rtol: f64) -> Result<Vec<f64>> {
        let op = ScreenedOperator::new(self.grid, phi.iter().map(|p| p.exp()).collect());
        Ok(pcg(&op, rhs, rtol, MAX_KRYLOV)?.0)
    }
}

/// Solve for the potential with a caller-chosen initial guess.
pub fn solve_poisson_boltzmann_from(
    rho: &DensityState,
    params: &EllipticParams,
    initial: &ScalarField,
) -> Result<(ScalarField, NewtonReport)> {
    params.validate()?;
    let grid = *rho.grid();
    initial.grid().check_same(&grid, "initial potential")?;
    let prob = PbProblem {
        grid,
        rho_bar: rho.rho_bar.values(),
        k2: radial_symbol(&grid),
    };
    let (phi, report) = newton_solve(&prob, initial.values().to_vec(), &params.newton())?;
    Ok((ScalarField::new(grid, phi)?, report))
}

/// Initial guess `log(mean ρ)`.
pub fn default_initial_guess(rho: &DensityState) -> ScalarField {
    ScalarField::constant(*rho.grid(), rho.rho_bar.mean().ln_1p())
}

/// Unique solution of `e^φ − Δφ = ρ`.
pub fn solve_poisson_boltzmann(rho: &DensityState, params: &EllipticParams) -> Result<ScalarField> {
    Ok(solve_poisson_boltzmann_from(rho, params, &default_initial_guess(rho))?.0)
}

/// Solve `e^{φ0} h − Δh = r`.
pub fn solve_linearized(phi0: &ScalarField, r: &ScalarField, params: &EllipticParams) -> Result<ScalarField> {
    params.validate()?;
    let grid = *phi0.grid();
    r.grid().check_same(&grid, "linearized right-hand side")?;
    if let Some(index) = phi0.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "linearization point".into(),
            index,
        });
    }
    let op = ScreenedOperator::new(grid, phi0.values().iter().map(|p| p.exp()).collect());
    let (h, _) = pcg(&op, r.values(), params.krylov_tol, MAX_KRYLOV)?;
    ScalarField::new(grid, h)
}

/// Agreement required between the two gradient routes.
pub const GRADIENT_CHECK_TOL: f64 = 1e-9;

/// `∇φ` for `e^φ − Δφ = ρ`, cross-checked against `(e^φ − Δ)⁻¹ ∇ρ`.
pub fn grad_potential(rho: &DensityState, params: &EllipticParams) -> Result<VectorField> {
    let phi = solve_poisson_boltzmann(rho, params)?;
    let direct = calculus::gradient(&phi);
    let grad_rho = calculus::gradient(rho.rho_bar());
    let mut worst: f64 = 0.0;
    for a in 0..3 {
        let via = solve_linearized(&phi, &grad_rho[a], params)?;
        worst = worst.max(max_abs(&via.sub(&direct[a]).into_values()));
    }
    if worst > GRADIENT_CHECK_TOL {
        return Err(Error::Inconsistent {
            check: "gradient of potential".into(),
            discrepancy: worst,
            tolerance: GRADIENT_CHECK_TOL,
        });
    }
    Ok(direct)
}

/// Nodal PB solve with explicit Newton settings, for the time integrators.
pub(crate) fn solve_pb_nodal(
    rho: &DensityState,
    settings: &NewtonSettings,
    initial: Vec<f64>,
) -> Result<(Vec<f64>, NewtonReport)> {
    let grid = *rho.grid();
    let prob = PbProblem {
        grid,
        rho_bar: rho.rho_bar.values(),
        k2: radial_symbol(&grid),
    };
    newton_solve(&prob, initial, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::periodic(n).unwrap()
    }

    #[test]
    fn uniform_density_gives_zero() {
        let g = grid(8);
        let phi = solve_poisson_boltzmann(&DensityState::uniform(g), &EllipticParams::default()).unwrap();
        assert!(phi.max_abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_density() {
        let g = grid(8);
        let f = ScalarField::from_fn(g, |x| -1.5 * x[0].cos());
        assert!(matches!(DensityState::new(f), Err(Error::NonPositiveDensity { .. })));
    }

    #[test]
    fn small_perturbation_halves() {
        let g = grid(16);
        let eps = 1e-6;
        let rho = DensityState::new(ScalarField::from_fn(g, |x| eps * x[0].cos())).unwrap();
        let phi = solve_poisson_boltzmann(&rho, &EllipticParams::default()).unwrap();
        let lin = ScalarField::from_fn(g, |x| 0.5 * eps * x[0].cos());
        assert!(phi.sub(&lin).max_abs() < 1e-11);
    }

    #[test]
    fn linearized_examples() {
        let g = grid(16);
        let p = EllipticParams::default();
        let zero = ScalarField::zeros(g);
        let r = ScalarField::from_fn(g, |x| x[0].cos());
        let h = solve_linearized(&zero, &r, &p).unwrap();
        assert!(h.sub(&r.scale(0.5)).max_abs() < 1e-14);
        let c = ScalarField::constant(g, 0.7);
        let h = solve_linearized(&zero, &c, &p).unwrap();
        assert!(h.sub(&c).max_abs() < 1e-14);
    }

    #[test]
    fn linearized_residual_is_small() {
        let g = grid(16);
        let p = EllipticParams::default();
        let phi0 = ScalarField::from_fn(g, |x| 0.8 * (x[0] + x[1]).sin() - 0.3 * x[2].cos());
        let r = ScalarField::from_fn(g, |x| (2.0 * x[1]).cos() + 0.5 * x[0].sin() * x[2].sin());
        let h = solve_linearized(&phi0, &r, &p).unwrap();
        let res = phi0.map(f64::exp).mul(&h).sub(&calculus::laplacian(&h)).sub(&r);
        assert!(res.l2_norm() / r.l2_norm() < 1e-10);
    }
}
