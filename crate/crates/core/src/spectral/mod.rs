//! Periodic grids, spectral transforms and calculus.

pub mod calculus;
pub mod dealias;
pub mod fft;
pub mod field;
pub mod grid;
pub mod norms;
pub mod nufft;
pub mod offgrid;

pub use calculus::{curl, divergence, gradient, inverse_helmholtz, jacobian, laplacian};
pub use dealias::{dealias, dealias_field, dealias_vector};
pub use field::{forward_transform, inverse_transform, ScalarField, SobolevIndex, Spectrum, VectorField};
pub use grid::GridSpec;
pub use norms::{sobolev_norm, SobolevNorm};
pub use offgrid::{evaluate_offgrid, evaluate_offgrid_many, Method};
