use crate::elliptic::DensityState;
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, ScalarField, VectorField};

use super::flowmap::det_minus_one;

/// Lagrangian state: flow map `φ = id + W` and label velocity `v = φ_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMapState {
    pub w: VectorField,
    pub v: VectorField,
    pub t: f64,
}

impl FlowMapState {
    /// Checks grids and `det(dφ) > 0`.
    pub fn new(w: VectorField, v: VectorField, t: f64) -> Result<Self> {
        v.grid().check_same(w.grid(), "flow map velocity")?;
        let s = Self { w, v, t };
        let min = s.min_jacobian_det();
        if !(min > 0.0) {
            return Err(Error::JacobianDegenerate { t, min_det: min });
        }
        Ok(s)
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self {
            w: VectorField::zeros(grid),
            v: VectorField::zeros(grid),
            t: 0.0,
        }
    }

    /// `φ = id` with initial velocity `u0`.
    pub fn at_rest_map(u0: &VectorField) -> Self {
        Self {
            w: VectorField::zeros(*u0.grid()),
            v: u0.clone(),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.w.grid()
    }

    pub fn min_jacobian_det(&self) -> f64 {
        1.0 + det_minus_one(&self.w).min()
    }
}

/// Eulerian state `(ρ̄, u)` with `ρ = 1 + ρ̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct EulerianState {
    pub rho_bar: ScalarField,
    pub u: VectorField,
    pub t: f64,
}

impl EulerianState {
    /// Checks grids and `1 + ρ̄ > 0`.
    pub fn new(rho_bar: ScalarField, u: VectorField, t: f64) -> Result<Self> {
        u.grid().check_same(rho_bar.grid(), "Eulerian velocity")?;
        DensityState::new(rho_bar.clone())?;
        Ok(Self { rho_bar, u, t })
    }

    pub fn equilibrium(grid: GridSpec) -> Self {
        Self {
            rho_bar: ScalarField::zeros(grid),
            u: VectorField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.rho_bar.grid()
    }

    pub fn density(&self) -> Result<DensityState> {
        DensityState::new(self.rho_bar.clone())
    }
}

/// Classical four-stage Runge-Kutta with a fixed step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStepper {
    pub dt: f64,
    /// Apply the two-thirds rule to each Eulerian stage derivative.
    pub dealias_each_stage: bool,
}

impl TimeStepper {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            dt,
            dealias_each_stage: true,
        })
    }

    /// Number of steps covering `[0, horizon]`; `dt` must divide `horizon`.
    pub fn steps_for(&self, horizon: f64) -> Result<usize> {
        let steps = (horizon / self.dt).round();
        if !(horizon >= 0.0) || (steps * self.dt - horizon).abs() > 1e-9 * horizon.max(self.dt) {
            return Err(Error::StepMismatch {
                dt: self.dt,
                horizon,
            });
        }
        Ok(steps as usize)
    }
}

/// Per-output-time diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// `‖det(dφ)(ρ∘φ) − ρ0‖_∞`, when a flow map is available.
    pub density_transport_residual: Option<f64>,
    /// Relative `H^{s−1}` vorticity transport residual, when a flow map is available.
    pub vorticity_transport_residual: Option<f64>,
    pub min_jacobian_det: Option<f64>,
    pub rho_bar_norm: f64,
    pub u_norm: f64,
    pub omega_norm: f64,
}

impl DiagnosticsRecord {
    pub const FIELDS: [&'static str; 9] = [
        "t",
        "mass",
        "energy",
        "density_transport_residual",
        "vorticity_transport_residual",
        "min_jacobian_det",
        "rho_bar_norm",
        "u_norm",
        "omega_norm",
    ];
}
