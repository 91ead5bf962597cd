use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use epflow_core::dynamics::{rk4_step, EulerianFlow, EulerianState, FlowMapState, LagrangianFlow, TimeStepper};
use epflow_core::elliptic::{solve_poisson_boltzmann, DensityState, EllipticParams};
use epflow_core::linearized::{KernelLabel, MultiplierKernel};
use epflow_core::spectral::{forward_transform, inverse_transform};
use epflow_core::{GridSpec, ScalarField, VectorField};
use std::hint::black_box;

fn data(n: usize) -> (ScalarField, VectorField) {
    let g = GridSpec::periodic(n).unwrap();
    let rho = ScalarField::from_fn(g, |x| 0.1 * (0.6 * x[0].cos() + 0.4 * (x[1] + x[2]).sin()));
    let u = VectorField::from_fn(g, |x| [0.1 * x[1].sin(), 0.05 * (x[2] + x[0]).cos(), 0.07 * x[0].sin()]);
    (rho, u)
}

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_round_trip");
    for n in [16, 32, 48] {
        let (rho, _) = data(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &rho, |b, f| {
            b.iter(|| inverse_transform(&forward_transform(black_box(f)).unwrap()))
        });
    }
    group.finish();
}

fn poisson_boltzmann(c: &mut Criterion) {
    let mut group = c.benchmark_group("pb_solve");
    group.sample_size(20);
    for n in [16, 32] {
        let rho = DensityState::new(data(n).0).unwrap();
        let p = EllipticParams::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &rho, |b, r| {
            b.iter(|| solve_poisson_boltzmann(black_box(r), &p).unwrap())
        });
    }
    group.finish();
}

fn rk4(c: &mut Criterion) {
    let mut group = c.benchmark_group("rk4_step");
    group.sample_size(10);
    let n = 16;
    let (rho, u) = data(n);
    let g = *rho.grid();
    let p = EllipticParams::default();
    let st = TimeStepper::new(1e-3).unwrap();
    let e0 = EulerianState::new(rho.clone(), u.clone(), 0.0).unwrap();
    let mut eul = EulerianFlow::new(&g, p, &st);
    group.bench_function("eulerian_n16", |b| b.iter(|| rk4_step(&mut eul, black_box(&e0), st.dt).unwrap()));
    let rho0 = DensityState::new(rho).unwrap();
    let l0 = FlowMapState::at_rest_map(&u);
    let mut lag = LagrangianFlow::new(rho0, p);
    group.bench_function("lagrangian_n16", |b| b.iter(|| rk4_step(&mut lag, black_box(&l0), st.dt).unwrap()));
    group.finish();
}

fn kernel_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_apply");
    let (_, u) = data(32);
    for (name, label) in [("K", KernelLabel::K), ("K_tilde", KernelLabel::KTilde)] {
        let k = MultiplierKernel::new(label, 1.0);
        group.bench_function(name, |b| b.iter(|| k.apply(black_box(&u)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, fft, poisson_boltzmann, rk4, kernel_apply);
criterion_main!(benches);
