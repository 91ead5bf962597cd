//! Linearization of the flow-map equations at the equilibrium `(id, 1)`.

pub mod gate;
pub mod kernel;
pub mod operators;
pub mod probe;

pub use gate::{convention_gate, GateReport, GATE_TOL};
pub use kernel::{
    factorial_tail_index, kernel_k, kernel_ktilde, linearized_flow_derivative, matrix_series, KernelLabel,
    MultiplierKernel, SeriesParams, SeriesSum,
};
pub use operators::{
    apply_a, apply_b, apply_multiplier, helmholtz_gradient, helmholtz_inverse, multiplier_ma, multiplier_ma_second_order,
    operator_norm, symbol_wavevector, AVariant, Conventions, Mat3,
};
pub use probe::{find_probe, probe_value, ProbeData, SearchParams};
