use epflow_core::elliptic::*;
use epflow_core::spectral::calculus::laplacian;
use epflow_core::{GridSpec, ScalarField};
use std::time::Instant;

fn manufactured(g: GridSpec) -> (ScalarField, DensityState) {
    let exact = ScalarField::from_fn(g, |x| 0.3 * x[0].sin());
    let rho_bar = ScalarField::from_fn(g, |x| (0.3 * x[0].sin()).exp_m1() + 0.3 * x[0].sin());
    (exact, DensityState::new(rho_bar).unwrap())
}

fn random_density(g: GridSpec, amp: f64) -> DensityState {
    let f = ScalarField::from_fn(g, |x| {
        0.6 * (x[0] + 0.4).sin() * x[1].cos() + 0.3 * (2.0 * x[2] - x[1]).cos() + 0.25 * (x[0] - 3.0 * x[2]).sin()
    });
    let m = f.max_abs();
    DensityState::new(f.scale(amp / m)).unwrap()
}

#[test]
fn manufactured_solution_recovered() {
    let g = GridSpec::periodic(32).unwrap();
    let (exact, rho) = manufactured(g);
    let t = Instant::now();
    let phi = solve_poisson_boltzmann(&rho, &EllipticParams::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    assert!(phi.sub(&exact).max_abs() < 1e-10, "err {}", phi.sub(&exact).max_abs());
    assert!(secs < 2.0, "took {secs}");
}

#[test]
fn residual_meets_tolerance_and_converges_quadratically() {
    let g = GridSpec::periodic(16).unwrap();
    let rho = random_density(g, 0.8);
    let p = EllipticParams::default();
    let (phi, rep) = solve_poisson_boltzmann_from(&rho, &p, &default_initial_guess(&rho)).unwrap();
    let res = phi.map(f64::exp_m1).sub(&laplacian(&phi)).sub(rho.rho_bar());
    assert!(res.max_abs() <= p.newton_tol);
    let r = &rep.residuals;
    // terminal phase: r_{k+1} <= C r_k^2
    let k = r.len() - 2;
    assert!(r[k] < 1e-4, "{r:?}");
    assert!(r[k + 1] <= 1e3 * r[k] * r[k] || r[k + 1] < 1e-13, "{r:?}");
}

#[test]
fn uniqueness_from_distinct_guesses() {
    let g = GridSpec::periodic(16).unwrap();
    let rho = random_density(g, 0.5);
    let p = EllipticParams::default();
    let guesses = [0.0, rho.rho_bar().mean().ln_1p(), 0.5, -0.5];
    let sols: Vec<ScalarField> = guesses
        .iter()
        .map(|&c| solve_poisson_boltzmann_from(&rho, &p, &ScalarField::constant(g, c)).unwrap().0)
        .collect();
    for s in &sols[1..] {
        assert!(s.sub(&sols[0]).max_abs() < 1e-9);
    }
}

#[test]
fn compatibility_integral() {
    let g = GridSpec::periodic(16).unwrap();
    let rho = random_density(g, 0.7);
    let phi = solve_poisson_boltzmann(&rho, &EllipticParams::default()).unwrap();
    let lhs = phi.map(f64::exp).integral();
    let rhs = rho.rho().integral();
    assert!((lhs - rhs).abs() / rhs < 1e-9);
}

#[test]
fn comparison_principle() {
    let g = GridSpec::periodic(16).unwrap();
    let p = EllipticParams::default();
    let base = random_density(g, 0.4);
    let bump = ScalarField::from_fn(g, |x| 0.2 * (1.0 + x[0].cos()) * (1.0 + x[1].sin()) / 4.0);
    let higher = DensityState::new(base.rho_bar().add(&bump)).unwrap();
    let p1 = solve_poisson_boltzmann(&higher, &p).unwrap();
    let p2 = solve_poisson_boltzmann(&base, &p).unwrap();
    assert!(p1.sub(&p2).min() >= -1e-9);
}

#[test]
fn gradient_routes_agree() {
    // the two routes differ by the aliasing error of nodal e^φ, which is
    // about 1e-8 at n = 16 for amplitude 0.5 and far below 1e-9 at n = 32
    let g = GridSpec::periodic(32).unwrap();
    let p = EllipticParams::default();
    for amp in [0.1, 0.3, 0.5] {
        let rho = random_density(g, amp);
        grad_potential(&rho, &p).unwrap();
    }
    let (_, rho) = manufactured(g);
    let grad = grad_potential(&rho, &p).unwrap();
    let expect = ScalarField::from_fn(g, |x| 0.3 * x[0].cos());
    assert!(grad[0].sub(&expect).max_abs() < 1e-10);
    assert!(grad[1].max_abs() < 1e-12 && grad[2].max_abs() < 1e-12);
    let zero = grad_potential(&DensityState::uniform(g), &p).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}
