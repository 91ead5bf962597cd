use epflow_core::dynamics::{integrate_lagrangian, FlowMapState, TimeStepper};
use epflow_core::elliptic::{DensityState, EllipticParams};
use epflow_core::linearized::operators::Conventions;
use epflow_core::linearized::{convention_gate, kernel_k, linearized_flow_derivative, SeriesParams, GATE_TOL};
use epflow_core::{GridSpec, ScalarField, VectorField};

#[test]
fn gate_reproduces_frozen_conventions() {
    let g = GridSpec::periodic(8).unwrap();
    let rep = convention_gate(&g).unwrap();
    assert_eq!(rep.conventions, Conventions::RESOLVED);
    let best = rep.a_block.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    assert!(best <= GATE_TOL, "best residual {best:e}");
}

#[test]
fn k_symbol_closed_form() {
    let t = 1.3;
    for xi in [[1.0, 0.0, 0.0], [1.0, -2.0, 3.0], [0.0, 4.0, 1.0]] {
        let k = kernel_k(t, xi, &SeriesParams::default()).unwrap().value;
        let k2: f64 = xi.iter().map(|x| x * x).sum();
        let omega = (k2 / (1.0 + k2)).sqrt();
        let lon = (omega * t).sin() / omega;
        for i in 0..3 {
            for j in 0..3 {
                let p = xi[i] * xi[j] / k2;
                let want = lon * p + t * (if i == j { 1.0 } else { 0.0 } - p);
                assert!((k[i][j].re - want).abs() < 1e-12 && k[i][j].im.abs() < 1e-12);
            }
        }
    }
}

/// `w(T; εu, ερ)/ε → ∂φ(T)` with error `O(ε)`.
#[test]
fn linearization_matches_small_amplitude_runs() {
    let g = GridSpec::periodic(8).unwrap();
    let u = VectorField::from_fn(g, |x| [x[1].sin(), 0.5 * (x[2] + x[0]).cos(), 0.7 * x[0].sin()]);
    let rho = ScalarField::from_fn(g, |x| 0.6 * x[0].cos() + 0.4 * (x[1] + x[2]).sin());
    let t = 1.0;
    let d = linearized_flow_derivative(&u, &rho, t, &SeriesParams::default()).unwrap();
    let p = EllipticParams { newton_tol: 1e-14, ..EllipticParams::default() };
    let st = TimeStepper::new(0.01).unwrap();
    let err = |eps: f64| {
        let r0 = DensityState::new(rho.scale(eps)).unwrap();
        let run = integrate_lagrangian(FlowMapState::at_rest_map(&u.scale(eps)), &r0, &p, &st, t, 0);
        assert!(run.error.is_none());
        run.last().w.scale(1.0 / eps).sub(&d).max_abs() / d.max_abs()
    };
    let (e1, e2) = (err(1e-2), err(5e-3));
    assert!(e1 < 1e-1, "e1 {e1:e}");
    let order = (e1 / e2).log2();
    assert!((order - 1.0).abs() < 0.2, "order {order} ({e1:e}, {e2:e})");
}
