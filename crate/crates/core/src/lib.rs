//! Spectral solver for the Euler-Poisson ion system on a periodic box.
//!
//! The density and velocity `(ρ, u)` evolve by
//! `ρ_t + div(ρu) = 0`, `u_t + (u·∇)u = −∇φ`, with the potential given by the
//! Poisson-Boltzmann relation `e^φ − Δφ = ρ`. Both the Eulerian form and the
//! Lagrangian flow-map form are integrated.

pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod linearized;
pub mod spectral;
pub mod sum;

pub use error::{Error, Result};
pub use spectral::{GridSpec, Method, ScalarField, SobolevIndex, Spectrum, VectorField};
