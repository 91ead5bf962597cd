use epflow_core::dynamics::*;
use epflow_core::elliptic::{DensityState, EllipticParams};
use epflow_core::spectral::{evaluate_offgrid_many, sobolev_norm, Method};
use epflow_core::{GridSpec, ScalarField, VectorField};

fn smooth(g: GridSpec, a: f64) -> (DensityState, VectorField) {
    let rho = ScalarField::from_fn(g, |x| a * (0.6 * x[0].cos() + 0.4 * (x[1] + x[2]).sin()));
    let u = VectorField::from_fn(g, |x| [a * x[1].sin(), 0.5 * a * (x[2] + x[0]).cos(), 0.7 * a * x[0].sin()]);
    (DensityState::new(rho).unwrap(), u)
}

#[test]
fn equilibrium_stays_put() {
    let g = GridSpec::periodic(8).unwrap();
    let p = EllipticParams::default();
    let st = TimeStepper::new(0.05).unwrap();
    let eul = integrate_eulerian(EulerianState::equilibrium(g), &p, &st, 0.5, 0);
    assert!(eul.error.is_none());
    let last = eul.last();
    assert!(last.rho_bar.max_abs() <= 1e-12 && last.u.max_abs() <= 1e-12);
    let rho0 = DensityState::new(ScalarField::zeros(g)).unwrap();
    let lag = integrate_lagrangian(FlowMapState::identity(g), &rho0, &p, &st, 0.5, 0);
    assert!(lag.error.is_none());
    assert!(lag.last().w.max_abs() <= 1e-12 && lag.last().v.max_abs() <= 1e-12);
}

#[test]
fn uniform_translation_is_exact() {
    let g = GridSpec::periodic(8).unwrap();
    let c = [0.3, -0.2, 0.1];
    let u = VectorField::from_fn(g, |_| c);
    let p = EllipticParams::default();
    let st = TimeStepper::new(0.1).unwrap();
    let rho0 = DensityState::new(ScalarField::zeros(g)).unwrap();
    let lag = integrate_lagrangian(FlowMapState::at_rest_map(&u), &rho0, &p, &st, 1.0, 0);
    let last = lag.last();
    assert!((last.t - 1.0).abs() < 1e-12);
    let exact = u.scale(last.t);
    assert!(last.w.sub(&exact).max_abs() <= 1e-12);
    let eul = integrate_eulerian(EulerianState::new(ScalarField::zeros(g), u.clone(), 0.0).unwrap(), &p, &st, 1.0, 0);
    assert!(eul.last().u.sub(&u).max_abs() <= 1e-12);
}

#[test]
fn formulations_agree() {
    let g = GridSpec::periodic(16).unwrap();
    let (rho0, u0) = smooth(g, 0.1);
    let p = EllipticParams::default();
    let st = TimeStepper::new(0.02).unwrap();
    let t = 0.4;
    let eul = integrate_eulerian(EulerianState::new(rho0.rho_bar().clone(), u0.clone(), 0.0).unwrap(), &p, &st, t, 0);
    let lag = integrate_lagrangian(FlowMapState::at_rest_map(&u0), &rho0, &p, &st, t, 0);
    let rec = reconstruct_eulerian(lag.last(), &rho0).unwrap();
    let e = eul.last();
    let du = e.u.sub(&rec.u).max_abs() / e.u.max_abs();
    let dr = e.rho_bar.sub(&rec.rho_bar).max_abs() / e.rho_bar.max_abs();
    assert!(du < 1e-6 && dr < 1e-6, "du {du:e} dr {dr:e}");
}

#[test]
fn flow_map_equations_are_time_reversible() {
    let g = GridSpec::periodic(8).unwrap();
    let (rho0, u0) = smooth(g, 0.1);
    let p = EllipticParams { newton_tol: 1e-14, ..EllipticParams::default() };
    let st = TimeStepper::new(0.01).unwrap();
    let fwd = integrate_lagrangian(FlowMapState::at_rest_map(&u0), &rho0, &p, &st, 0.5, 0);
    let end = fwd.last();
    let back_init = FlowMapState::new(end.w.clone(), end.v.scale(-1.0), 0.0).unwrap();
    let back = integrate_lagrangian(back_init, &rho0, &p, &st, 0.5, 0);
    assert!(back.error.is_none());
    let w = sobolev_norm(&back.last().w, 3.0).unwrap();
    let v = back.last().v.add(&u0).max_abs();
    assert!(w <= 1e-6 && v <= 1e-6, "w {w:e} v {v:e}");
}

#[test]
fn flow_map_inverse_composes_to_identity() {
    let g = GridSpec::periodic(16).unwrap();
    let w = VectorField::from_fn(g, |x| [0.1 * x[1].sin(), 0.08 * (x[0] + x[2]).cos(), 0.05 * x[0].sin()]);
    let y = invert_flow_map(&w, INVERSION_TOL).unwrap();
    // φ(ψ(x)) = x  ⇔  y(x) + w(x + y(x)) = 0
    let nodes: Vec<[f64; 3]> = (0..g.len())
        .map(|idx| {
            let x = g.node(idx);
            std::array::from_fn(|a| x[a] + y[a].values()[idx])
        })
        .collect();
    let wy = evaluate_offgrid_many(&[&w[0], &w[1], &w[2]], &nodes, Method::Trig).unwrap();
    let defect = (0..g.len())
        .flat_map(|idx| (0..3).map(move |a| (idx, a)))
        .map(|(idx, a)| (y[a].values()[idx] + wy[a][idx]).abs())
        .fold(0.0, f64::max);
    assert!(defect <= 1e-10, "defect {defect:e}");
}

#[test]
fn jacobian_of_identity_is_one() {
    let g = GridSpec::periodic(8).unwrap();
    let j = jacobian_det(&FlowMapState::identity(g));
    assert!(j.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
}
