//! Nonlinear Poisson-Boltzmann solver and its linearization.

pub mod krylov;
pub mod newton;
pub mod pb;

pub use krylov::{pcg, KrylovReport, SpdSystem};
pub use newton::{newton_solve, NewtonReport, NewtonSettings, NonlinearProblem};
pub use pb::{
    default_initial_guess, grad_potential, solve_linearized, solve_poisson_boltzmann,
    solve_poisson_boltzmann_from, DensityState, EllipticParams,
};
