//! Time integration in Eulerian and Lagrangian form, flow-map geometry and
//! transport diagnostics.

pub mod diagnostics;
pub mod eulerian;
pub mod flowmap;
pub mod integrate;
pub mod lagrangian;
pub(crate) mod ops;
pub mod state;
pub(crate) mod warm;

pub use diagnostics::{eulerian_diagnostics, lagrangian_diagnostics, paired_diagnostics, reconstruct_eulerian};
pub use eulerian::{eulerian_energy, eulerian_rhs, eulerian_rhs_with, mass, EulerianDerivative};
pub use flowmap::{
    density_from_flow, invert_flow_map, jacobian_det, pullback, pullback_vector, pushforward, pushforward_vector,
    vorticity_transport, INVERSION_TOL,
};
pub use integrate::{
    integrate, integrate_eulerian, integrate_lagrangian, rk4_step, EulerianFlow, Formulation, LagrangianFlow,
    Trajectory, CFL, JACOBIAN_FLOOR,
};
pub use lagrangian::{label_potential, lagrangian_energy, lagrangian_rhs, lagrangian_rhs_composed, LagrangianDerivative};
pub use state::{DiagnosticsRecord, EulerianState, FlowMapState, TimeStepper};
