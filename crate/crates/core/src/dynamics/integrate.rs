//! Fixed-step RK4 driver for both formulations.

use super::eulerian::{eulerian_rhs_fast, EulerianDerivative};
use super::lagrangian::{lagrangian_rhs_fast, LagrangianDerivative};
use super::ops::SpectralOps;
use super::state::{EulerianState, FlowMapState, TimeStepper};
use super::warm::PotentialHistory;
use crate::elliptic::{DensityState, EllipticParams};
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, ScalarField, VectorField};

/// Runs abort once `min det(dφ)` falls to this value.
pub const JACOBIAN_FLOOR: f64 = 0.05;
/// Courant number bound: `dt ≤ CFL · Δx / max|u|`.
pub const CFL: f64 = 0.5;

/// One side of the RK4 scheme: a state space with a derivative.
pub trait Formulation {
    type State: Clone;
    type Derivative;

    fn derivative(&mut self, state: &Self::State) -> Result<Self::Derivative>;

    /// `state + Σ cᵢ dᵢ`, with time advanced by `h`.
    fn advance(&self, state: &Self::State, h: f64, terms: &[(f64, &Self::Derivative)]) -> Self::State;

    /// Final combination of a step; may differ from `advance` by keeping
    /// rounding compensation across steps.
    fn accept(&mut self, state: &Self::State, h: f64, terms: &[(f64, &Self::Derivative)]) -> Self::State {
        self.advance(state, h, terms)
    }

    fn time(state: &Self::State) -> f64;

    fn set_time(state: &mut Self::State, t: f64);

    /// Checks run before each step.
    fn guard(&self, state: &Self::State, dt: f64) -> Result<()>;

    /// Checks run on the final state.
    fn finish(&self, _state: &Self::State) -> Result<()> {
        Ok(())
    }
}

/// States at output times. On abort, `error` holds the cause and `states`
/// everything accepted before it.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    pub steps: usize,
    pub error: Option<Error>,
}

impl<S> Trajectory<S> {
    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }

    /// The final state, or the abort error.
    pub fn into_result(self) -> Result<S> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.states.into_iter().last().expect("trajectory holds the initial state")),
        }
    }
}

pub fn rk4_step<F: Formulation>(form: &mut F, y: &F::State, dt: f64) -> Result<F::State> {
    let k1 = form.derivative(y)?;
    let y2 = form.advance(y, 0.5 * dt, &[(0.5 * dt, &k1)]);
    let k2 = form.derivative(&y2)?;
    let y3 = form.advance(y, 0.5 * dt, &[(0.5 * dt, &k2)]);
    let k3 = form.derivative(&y3)?;
    let y4 = form.advance(y, dt, &[(dt, &k3)]);
    let k4 = form.derivative(&y4)?;
    let (a, b) = (dt / 6.0, dt / 3.0);
    Ok(form.accept(y, dt, &[(a, &k1), (b, &k2), (b, &k3), (a, &k4)]))
}

/// Integrate over `[t0, t0 + horizon]`, keeping every `output_every`-th state
/// and the last one.
pub fn integrate<F: Formulation>(
    form: &mut F,
    initial: F::State,
    stepper: &TimeStepper,
    horizon: f64,
    output_every: usize,
) -> Trajectory<F::State> {
    let mut traj = Trajectory {
        states: vec![initial.clone()],
        steps: 0,
        error: None,
    };
    let steps = match stepper.steps_for(horizon) {
        Ok(s) => s,
        Err(e) => {
            traj.error = Some(e);
            return traj;
        }
    };
    let every = output_every.max(1);
    let t0 = F::time(&initial);
    let mut y = initial;
    for step in 0..steps {
        let next = form
            .guard(&y, stepper.dt)
            .and_then(|_| rk4_step(form, &y, stepper.dt));
        match next {
            Ok(mut s) => {
                F::set_time(&mut s, t0 + (step + 1) as f64 * stepper.dt);
                y = s;
                traj.steps = step + 1;
                if (step + 1) % every == 0 || step + 1 == steps {
                    traj.states.push(y.clone());
                }
            }
            Err(e) => {
                if traj.steps % every != 0 {
                    traj.states.push(y);
                }
                traj.error = Some(e);
                return traj;
            }
        }
    }
    if let Err(e) = form.finish(&y) {
        traj.error = Some(e);
    }
    traj
}

fn cfl_check(grid: &GridSpec, speed: f64, dt: f64, t: f64) -> Result<()> {
    if speed > 0.0 {
        let limit = CFL * grid.spacing() / speed;
        if dt > limit {
            return Err(Error::Cfl { t, dt, limit });
        }
    }
    Ok(())
}

fn lincomb_scalar(base: &ScalarField, terms: &[(f64, &ScalarField)]) -> ScalarField {
    let mut v = base.values().to_vec();
    for (c, d) in terms {
        for (x, y) in v.iter_mut().zip(d.values()) {
            *x += c * y;
        }
    }
    ScalarField::from_parts(*base.grid(), v)
}

fn lincomb_vector(base: &VectorField, terms: &[(f64, &VectorField)]) -> VectorField {
    VectorField::from_comps(std::array::from_fn(|a| {
        let t: Vec<(f64, &ScalarField)> = terms.iter().map(|(c, d)| (*c, &d[a])).collect();
        lincomb_scalar(&base[a], &t)
    }))
}

/// Compensated summation of accepted steps, `y ← y + Σ cᵢ kᵢ`.
///
/// Without it the rounding of each state update random-walks and sets an
/// error floor well above the RK4 truncation error at small `dt`.
#[derive(Debug, Default)]
struct Carry {
    t: f64,
    c: Vec<Vec<f64>>,
}

impl Carry {
    fn add(&mut self, t_base: f64, t_new: f64, base: &[&ScalarField], terms: &[Vec<(f64, &ScalarField)>]) -> Vec<ScalarField> {
        let fresh = (self.t - t_base).abs() > 1e-12 * t_base.abs().max(1.0) || self.c.len() != base.len();
        if fresh {
            self.c = base.iter().map(|b| vec![0.0; b.values().len()]).collect();
        }
        self.t = t_new;
        base.iter()
            .zip(terms)
            .zip(self.c.iter_mut())
            .map(|((b, ts), carry)| {
                let y0 = b.values();
                let vals = (0..y0.len())
                    .map(|i| {
                        let inc = ts.iter().map(|(c, d)| c * d.values()[i]).sum::<f64>() + carry[i];
                        let y = y0[i] + inc;
                        carry[i] = inc - (y - y0[i]);
                        y
                    })
                    .collect();
                ScalarField::from_parts(*b.grid(), vals)
            })
            .collect()
    }
}

fn vector_from(it: &mut impl Iterator<Item = ScalarField>) -> VectorField {
    VectorField::from_comps([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

/// Eulerian right-hand side with warm-started potential solves.
pub struct EulerianFlow {
    params: EllipticParams,
    dealias: bool,
    ops: SpectralOps,
    history: PotentialHistory,
    carry: Carry,
}

impl EulerianFlow {
    pub fn new(grid: &GridSpec, params: EllipticParams, stepper: &TimeStepper) -> Self {
        Self {
            params,
            dealias: stepper.dealias_each_stage,
            ops: SpectralOps::new(grid),
            history: PotentialHistory::default(),
            carry: Carry::default(),
        }
    }
}

impl Formulation for EulerianFlow {
    type State = EulerianState;
    type Derivative = EulerianDerivative;

    fn derivative(&mut self, s: &EulerianState) -> Result<EulerianDerivative> {
        let guess = self.history.predict(s.t);
        let (d, phi) = eulerian_rhs_fast(&self.ops, s, &self.params, self.dealias, guess)?;
        self.history.record(s.t, &phi);
        Ok(d)
    }

    fn advance(&self, s: &EulerianState, h: f64, terms: &[(f64, &EulerianDerivative)]) -> EulerianState {
        let r: Vec<(f64, &ScalarField)> = terms.iter().map(|(c, d)| (*c, &d.rho_bar)).collect();
        let u: Vec<(f64, &VectorField)> = terms.iter().map(|(c, d)| (*c, &d.u)).collect();
        EulerianState {
            rho_bar: lincomb_scalar(&s.rho_bar, &r),
            u: lincomb_vector(&s.u, &u),
            t: s.t + h,
        }
    }

    fn accept(&mut self, s: &EulerianState, h: f64, terms: &[(f64, &EulerianDerivative)]) -> EulerianState {
        let base = [&s.rho_bar, &s.u[0], &s.u[1], &s.u[2]];
        let per: Vec<Vec<(f64, &ScalarField)>> = (0..4)
            .map(|f| {
                terms
                    .iter()
                    .map(|(c, d)| (*c, if f == 0 { &d.rho_bar } else { &d.u[f - 1] }))
                    .collect()
            })
            .collect();
        let mut it = self.carry.add(s.t, s.t + h, &base, &per).into_iter();
        let rho_bar = it.next().unwrap();
        EulerianState {
            rho_bar,
            u: vector_from(&mut it),
            t: s.t + h,
        }
    }

    fn time(s: &EulerianState) -> f64 {
        s.t
    }

    fn set_time(s: &mut EulerianState, t: f64) {
        s.t = t;
    }

    fn guard(&self, s: &EulerianState, dt: f64) -> Result<()> {
        cfl_check(s.grid(), s.u.max_norm(), dt, s.t)
    }

    fn finish(&self, s: &EulerianState) -> Result<()> {
        s.density().map(|_| ())
    }
}

/// Lagrangian right-hand side in label coordinates.
pub struct LagrangianFlow {
    rho0: DensityState,
    params: EllipticParams,
    ops: SpectralOps,
    history: PotentialHistory,
    carry: Carry,
}

impl LagrangianFlow {
    pub fn new(rho0: DensityState, params: EllipticParams) -> Self {
        Self {
            ops: SpectralOps::new(rho0.grid()),
            rho0,
            params,
            history: PotentialHistory::default(),
            carry: Carry::default(),
        }
    }
}

impl Formulation for LagrangianFlow {
    type State = FlowMapState;
    type Derivative = LagrangianDerivative;

    fn derivative(&mut self, s: &FlowMapState) -> Result<LagrangianDerivative> {
        let guess = self.history.predict(s.t);
        let (d, phi) = lagrangian_rhs_fast(&self.ops, s, &self.rho0, &self.params, guess, JACOBIAN_FLOOR)?;
        self.history.record(s.t, &phi);
        Ok(d)
    }

    fn advance(&self, s: &FlowMapState, h: f64, terms: &[(f64, &LagrangianDerivative)]) -> FlowMapState {
        let w: Vec<(f64, &VectorField)> = terms.iter().map(|(c, d)| (*c, &d.w)).collect();
        let v: Vec<(f64, &VectorField)> = terms.iter().map(|(c, d)| (*c, &d.v)).collect();
        FlowMapState {
            w: lincomb_vector(&s.w, &w),
            v: lincomb_vector(&s.v, &v),
            t: s.t + h,
        }
    }

    fn accept(&mut self, s: &FlowMapState, h: f64, terms: &[(f64, &LagrangianDerivative)]) -> FlowMapState {
        let base = [&s.w[0], &s.w[1], &s.w[2], &s.v[0], &s.v[1], &s.v[2]];
        let per: Vec<Vec<(f64, &ScalarField)>> = (0..6)
            .map(|f| {
                terms
                    .iter()
                    .map(|(c, d)| (*c, if f < 3 { &d.w[f] } else { &d.v[f - 3] }))
                    .collect()
            })
            .collect();
        let mut it = self.carry.add(s.t, s.t + h, &base, &per).into_iter();
        FlowMapState {
            w: vector_from(&mut it),
            v: vector_from(&mut it),
            t: s.t + h,
        }
    }

    fn time(s: &FlowMapState) -> f64 {
        s.t
    }

    fn set_time(s: &mut FlowMapState, t: f64) {
        s.t = t;
    }

    fn guard(&self, s: &FlowMapState, dt: f64) -> Result<()> {
        cfl_check(s.grid(), s.v.max_norm(), dt, s.t)
    }

    fn finish(&self, s: &FlowMapState) -> Result<()> {
        let min = s.min_jacobian_det();
        if !(min > JACOBIAN_FLOOR) {
            return Err(Error::JacobianDegenerate { t: s.t, min_det: min });
        }
        Ok(())
    }
}

pub fn integrate_eulerian(
    initial: EulerianState,
    params: &EllipticParams,
    stepper: &TimeStepper,
    horizon: f64,
    output_every: usize,
) -> Trajectory<EulerianState> {
    let mut form = EulerianFlow::new(initial.grid(), *params, stepper);
    integrate(&mut form, initial, stepper, horizon, output_every)
}

pub fn integrate_lagrangian(
    initial: FlowMapState,
    rho0: &DensityState,
    params: &EllipticParams,
    stepper: &TimeStepper,
    horizon: f64,
    output_every: usize,
) -> Trajectory<FlowMapState> {
    let mut form = LagrangianFlow::new(rho0.clone(), *params);
    integrate(&mut form, initial, stepper, horizon, output_every)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `y' = λ y` as a scalar formulation.
    struct Linear(f64);

    impl Formulation for Linear {
        type State = (f64, f64);
        type Derivative = f64;
        fn derivative(&mut self, s: &(f64, f64)) -> Result<f64> {
            Ok(self.0 * s.0)
        }
        fn advance(&self, s: &(f64, f64), h: f64, terms: &[(f64, &f64)]) -> (f64, f64) {
            (s.0 + terms.iter().map(|(c, d)| c * **d).sum::<f64>(), s.1 + h)
        }
        fn time(s: &(f64, f64)) -> f64 {
            s.1
        }
        fn set_time(s: &mut (f64, f64), t: f64) {
            s.1 = t;
        }
        fn guard(&self, s: &(f64, f64), _dt: f64) -> Result<()> {
            if s.0 > 2.0 {
                return Err(Error::InvalidParameter("blow-up".into()));
            }
            Ok(())
        }
    }

    #[test]
    fn rk4_is_fourth_order_on_scalar_ode() {
        let err = |dt: f64| {
            let st = TimeStepper::new(dt).unwrap();
            let tr = integrate(&mut Linear(-1.0), (1.0, 0.0), &st, 1.0, 1000);
            (tr.last().0 - (-1.0f64).exp()).abs()
        };
        let order = (err(0.1) / err(0.05)).log2();
        assert!((order - 4.0).abs() < 0.1, "{order}");
    }

    #[test]
    fn output_cadence_and_abort() {
        let st = TimeStepper::new(0.1).unwrap();
        let tr = integrate(&mut Linear(1.0), (1.0, 0.0), &st, 1.0, 3);
        // 1 initial + steps 3, 6, 9 + aborted tail
        assert!(tr.error.is_some());
        let t: Vec<f64> = tr.states.iter().map(|s| s.1).collect();
        assert_eq!(tr.steps, 7);
        assert_eq!(t.len(), 4);
        assert!((t[3] - 0.7).abs() < 1e-12 && (t[2] - 0.6).abs() < 1e-12);
        let tr = integrate(&mut Linear(-1.0), (1.0, 0.0), &st, 1.0, 4);
        assert!(tr.is_complete());
        assert_eq!(tr.states.len(), 4);
        assert!((tr.last().1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_horizon_is_rejected() {
        let st = TimeStepper::new(0.3).unwrap();
        let tr = integrate(&mut Linear(-1.0), (1.0, 0.0), &st, 1.0, 1);
        assert!(matches!(tr.error, Some(Error::StepMismatch { .. })));
        assert_eq!(tr.states.len(), 1);
    }

    #[test]
    fn cfl_guard_fires() {
        let g = GridSpec::periodic(8).unwrap();
        let s = EulerianState::new(ScalarField::zeros(g), VectorField::constant(g, [10.0, 0.0, 0.0]), 0.0).unwrap();
        let st = TimeStepper::new(0.1).unwrap();
        let tr = integrate_eulerian(s, &EllipticParams::default(), &st, 1.0, 1);
        assert!(matches!(tr.error, Some(Error::Cfl { .. })));
    }
}
