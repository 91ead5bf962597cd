//! The acceptance suite behind `epflow selftest`.
//!
//! Every tolerance is pinned here. A criterion passes when all of its checks
//! pass; `inject = <id>` makes every check of that criterion fail.

use crate::config::RunConfig;
use crate::manifest::AcceptanceEntry;
use crate::presets::{compact_base, smooth_data, unit};
use crate::records::{chebyshev_rows, float, write_records, write_table, AnalyticitySummary};
use anyhow::{anyhow, bail, Context, Result};
use epflow_core::dynamics::{
    eulerian_diagnostics, eulerian_energy, integrate_eulerian, integrate_lagrangian, lagrangian_diagnostics,
    lagrangian_energy, mass, paired_diagnostics, reconstruct_eulerian, EulerianState, FlowMapState, TimeStepper,
};
use epflow_core::elliptic::{
    default_initial_guess, solve_poisson_boltzmann_from, DensityState, EllipticParams,
};
use epflow_core::experiments::nonuniform::MIN_RADIUS_CELLS;
use epflow_core::experiments::{
    make_bump, norm_localization_check, run_analyticity, run_nonuniform, support_leak, AnalyticityParams, BumpSpec,
    NonuniformConfig,
};
use epflow_core::linearized::operators::{symbol_wavevector, AVariant, Conventions};
use epflow_core::linearized::probe::flow_displacement;
use epflow_core::linearized::{
    apply_b, apply_multiplier, convention_gate, find_probe, kernel_k, linearized_flow_derivative, SearchParams,
    SeriesParams,
};
use epflow_core::spectral::{calculus, sobolev_norm};
use epflow_core::{GridSpec, ScalarField, SobolevIndex, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::time::Instant;

pub const NAMES: [&str; 12] = [
    "elliptic solver",
    "equilibrium fixed point",
    "translation solution",
    "RK4 convergence",
    "cross-formulation oracle",
    "transport identities",
    "conservation",
    "linearization",
    "non-uniform dependence",
    "analyticity",
    "bump factory",
    "determinism",
];

// criterion 1
pub const C1_N: usize = 32;
pub const C1_MANUFACTURED_TOL: f64 = 1e-10;
pub const C1_UNIQUENESS_TOL: f64 = 1e-9;
pub const C1_COMPATIBILITY_TOL: f64 = 1e-9;
pub const C1_SECONDS_PER_SOLVE: f64 = 2.0;
// criteria 2 and 3
pub const C23_GRIDS: [usize; 2] = [16, 32];
pub const C23_DT: f64 = 1e-2;
pub const C2_TOL: f64 = 1e-10;
pub const C3_TOL: f64 = 1e-8;
pub const C3_VELOCITY: [f64; 3] = [0.3, -0.2, 0.1];
// criterion 4
pub const C4_N: usize = 8;
pub const C4_WAVENUMBER: f64 = 2.0;
pub const C4_STEPS: [f64; 3] = [4e-3, 2e-3, 1e-3];
pub const C4_REFERENCE_DT: f64 = 1.25e-4;
pub const C4_NEWTON_TOL: f64 = 1e-14;
pub const C4_ORDER: (f64, f64) = (3.8, 4.2);
// criteria 5 and 6
pub const C5_N: usize = 32;
pub const C5_T: f64 = 0.5;
pub const C5_DT: f64 = 1e-3;
pub const C5_OUTPUT_EVERY: usize = 100;
pub const C5_TOL: f64 = 1e-4;
pub const C6_DENSITY_TOL: f64 = 1e-6;
pub const C6_VORTICITY_TOL: f64 = 1e-5;
// criterion 7
pub const C7_N: usize = 16;
pub const C7_DT: f64 = 1e-3;
pub const C7_MASS_TOL: f64 = 1e-10;
pub const C7_ENERGY_TOL: f64 = 1e-6;
pub const C7_ORDER_STEPS: [f64; 3] = [0.2, 0.1, 0.05];
pub const C7_MIN_ORDER: f64 = 3.8;
// criterion 8
pub const C8_N: usize = 16;
pub const C8_FIELDS: usize = 50;
pub const C8_MODE_TOL: f64 = 1e-12;
pub const C8_EPS: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
pub const C8_DT: f64 = 1e-2;
pub const C8_SLOPE: (f64, f64) = (1.8, 2.2);
// criterion 9
pub const C9_N: usize = 48;
pub const C9_N_LIST: [usize; 4] = [2, 4, 8, 16];
pub const C9_R: f64 = 250.0;
pub const C9_PROBE_NORM: f64 = 200.0;
pub const C9_PROBE_RADIUS: f64 = 1.5;
pub const C9_BASE_AMPLITUDE: f64 = 0.1;
pub const C9_DT: f64 = 0.05;
pub const C9_SLOPE: (f64, f64) = (-1.05, -0.95);
pub const C9_SEPARATION_FACTOR: f64 = 2.0;
pub const C9_VORTICITY_FRACTION: f64 = 0.3;
pub const C9_SECONDS: f64 = 1800.0;
// criterion 10
pub const C10_N: usize = 16;
/// Labels in units of `L/2π`.
pub const C10_LABELS: [[f64; 3]; 5] = [
    [0.3, 1.0, 2.0],
    [1.5, 4.0, 0.7],
    [3.1, 3.1, 3.1],
    [5.0, 0.2, 2.5],
    [2.2, 5.5, 4.4],
];
pub const C10_MIN_R2: f64 = 0.99;
pub const C10_DEGENERATE_TOL: f64 = 1e-10;
// criterion 11
pub const C11_DIV_TOL: f64 = 1e-12;
pub const C11_NORM_TOL: f64 = 1e-12;
pub const C11_SUPPORT_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    /// Deterministic values; these go to `acceptance.csv`.
    pub metrics: Vec<(String, f64)>,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {} [{:.1} s]",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }

    pub fn entry(&self) -> AcceptanceEntry {
        AcceptanceEntry {
            id: self.id,
            name: self.name.to_string(),
            pass: self.pass,
            detail: self.detail.clone(),
        }
    }
}

/// Accumulates the checks of one criterion.
struct Checks {
    injected: bool,
    pass: bool,
    parts: Vec<String>,
    metrics: Vec<(String, f64)>,
}

impl Checks {
    fn new(injected: bool) -> Self {
        Self {
            injected,
            pass: true,
            parts: vec![],
            metrics: vec![],
        }
    }

    fn record(&mut self, ok: bool, text: String) {
        let ok = ok && !self.injected;
        self.pass &= ok;
        self.parts.push(if ok { text } else { format!("{text} VIOLATED") });
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.push((name.to_string(), v));
    }

    fn le(&mut self, name: &str, v: f64, bound: f64) {
        self.metric(name, v);
        self.record(v <= bound, format!("{name} {v:.3e} <= {bound:.0e}"));
    }

    fn ge(&mut self, name: &str, v: f64, bound: f64) {
        self.metric(name, v);
        self.record(v >= bound, format!("{name} {v:.4} >= {bound}"));
    }

    fn within(&mut self, name: &str, v: f64, (lo, hi): (f64, f64)) {
        self.metric(name, v);
        self.record(v >= lo && v <= hi, format!("{name} {v:.4} in [{lo}, {hi}]"));
    }

    fn require(&mut self, name: &str, ok: bool) {
        self.record(ok, name.to_string());
    }

    /// Wall-clock checks stay out of the metrics.
    fn seconds(&mut self, name: &str, v: f64, bound: f64) {
        self.record(v <= bound, format!("{name} {v:.2} s <= {bound} s"));
    }

    fn note(&mut self, text: String) {
        self.parts.push(text);
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn s3() -> SobolevIndex {
    SobolevIndex::new(3.0).expect("3 > 5/2")
}

fn tight() -> EllipticParams {
    EllipticParams {
        newton_tol: 1e-14,
        krylov_tol: 1e-15,
        ..EllipticParams::default()
    }
}

fn eulerian(rho: &ScalarField, u: &VectorField, p: &EllipticParams, dt: f64, t: f64, every: usize) -> Result<Vec<EulerianState>> {
    let st = TimeStepper::new(dt)?;
    let every = every.min(st.steps_for(t)?);
    let traj = integrate_eulerian(EulerianState::new(rho.clone(), u.clone(), 0.0)?, p, &st, t, every);
    if let Some(e) = traj.error {
        return Err(e.into());
    }
    Ok(traj.states)
}

fn lagrangian(rho0: &DensityState, u: &VectorField, p: &EllipticParams, dt: f64, t: f64, every: usize) -> Result<Vec<FlowMapState>> {
    let st = TimeStepper::new(dt)?;
    let every = every.min(st.steps_for(t)?);
    let traj = integrate_lagrangian(FlowMapState::at_rest_map(u), rho0, p, &st, t, every);
    if let Some(e) = traj.error {
        return Err(e.into());
    }
    Ok(traj.states)
}

fn last<T>(v: Vec<T>) -> T {
    v.into_iter().last().expect("trajectories keep the final state")
}

/// Band-limited random vector field: a sum of waves with `|k_a| ≤ n/3`.
pub fn random_band_limited(grid: &GridSpec, rng: &mut ChaCha8Rng) -> VectorField {
    let kmax = (grid.n() / 3) as i64;
    let q = 1.0 / unit(grid);
    let waves: Vec<([f64; 3], [f64; 3], f64)> = (0..6)
        .map(|_| {
            let k = [0; 3].map(|_: i32| rng.random_range(-kmax..=kmax) as f64 * q);
            let a = [0; 3].map(|_: i32| rng.random_range(-1.0..1.0));
            (k, a, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    VectorField::from_fn(*grid, |x| {
        let mut v = [0.0; 3];
        for (k, a, ph) in &waves {
            let c = (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos();
            for i in 0..3 {
                v[i] += a[i] * c;
            }
        }
        v
    })
}

/// Particle labels drawn uniformly in the box.
pub fn random_labels(grid: &GridSpec, count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| [0; 3].map(|_: i32| rng.random_range(0.0..grid.length())))
        .collect()
}

/// Nontrivial smooth data for the trajectory experiments.
pub fn analytic_data(grid: &GridSpec, a: f64) -> (ScalarField, VectorField) {
    let q = 1.0 / unit(grid);
    let u = VectorField::from_fn(*grid, |x| {
        let x = x.map(|v| q * v);
        [
            a * (0.6 * x[1].sin() + 0.3 * x[0].cos()),
            a * 0.5 * (x[2] + x[0]).cos(),
            a * 0.4 * (x[0] - x[1]).sin(),
        ]
    });
    let r = ScalarField::from_fn(*grid, |x| {
        let x = x.map(|v| q * v);
        a * (0.5 * x[0].cos() + 0.3 * (x[1] + x[2]).sin())
    });
    (r, u)
}

struct Suite<'a> {
    config: &'a RunConfig,
    dir: &'a Path,
    /// `(radius, center, target norm, w)` of every bump criterion 9 built.
    bumps: Option<Vec<Bump>>,
}

type Bump = (f64, [f64; 3], f64, VectorField);

impl Suite<'_> {
    fn injected(&self, id: u32) -> bool {
        self.config.inject == Some(id)
    }

    fn c1(&mut self, c: &mut Checks) -> Result<()> {
        let g = GridSpec::new(C1_N, self.config.length)?;
        let q = 1.0 / unit(&g);
        let p = EllipticParams::default();
        let mut slowest: f64 = 0.0;
        let mut timed = |rho: &DensityState, guess: &ScalarField| -> Result<ScalarField> {
            let t = Instant::now();
            let (phi, _) = solve_poisson_boltzmann_from(rho, &p, guess)?;
            slowest = slowest.max(t.elapsed().as_secs_f64());
            Ok(phi)
        };
        // e^φ − 1 − Δφ = ρ̄ with φ = 0.3 sin(q x)
        let exact = ScalarField::from_fn(g, |x| 0.3 * (q * x[0]).sin());
        let rho = DensityState::new(exact.zip_map(&exact, |f, _| f.exp_m1() + q * q * f))?;
        let phi = timed(&rho, &default_initial_guess(&rho))?;
        c.le("manufactured_error", phi.sub(&exact).max_abs(), C1_MANUFACTURED_TOL);

        let f = ScalarField::from_fn(g, |x| {
            let x = x.map(|v| q * v);
            0.6 * (x[0] + 0.4).sin() * x[1].cos() + 0.3 * (2.0 * x[2] - x[1]).cos() + 0.25 * (x[0] - 3.0 * x[2]).sin()
        });
        let rho = DensityState::new(f.scale(0.5 / f.max_abs()))?;
        let guesses = [0.0, rho.rho_bar().mean().ln_1p(), 0.5, -0.5];
        let sols = guesses
            .iter()
            .map(|&v| timed(&rho, &ScalarField::constant(g, v)))
            .collect::<Result<Vec<_>>>()?;
        let spread = sols[1..].iter().map(|s| s.sub(&sols[0]).max_abs()).fold(0.0, f64::max);
        c.le("newton_guess_spread", spread, C1_UNIQUENESS_TOL);
        let lhs = sols[0].map(f64::exp).integral();
        let rhs = rho.rho().integral();
        c.le("compatibility_defect", (lhs - rhs).abs() / rhs, C1_COMPATIBILITY_TOL);
        c.seconds("slowest_solve", slowest, C1_SECONDS_PER_SOLVE);
        Ok(())
    }

    fn c2(&mut self, c: &mut Checks) -> Result<()> {
        let p = EllipticParams::default();
        for n in C23_GRIDS {
            let g = GridSpec::new(n, self.config.length)?;
            let e = last(eulerian(&ScalarField::zeros(g), &VectorField::zeros(g), &p, C23_DT, 1.0, usize::MAX)?);
            let de = sobolev_norm(&e.rho_bar, 2.0)? + sobolev_norm(&e.u, 3.0)?;
            c.le(&format!("eulerian_n{n}"), de, C2_TOL);
            let l = last(lagrangian(&DensityState::uniform(g), &VectorField::zeros(g), &p, C23_DT, 1.0, usize::MAX)?);
            let dl = sobolev_norm(&l.w, 3.0)? + sobolev_norm(&l.v, 3.0)?;
            c.le(&format!("lagrangian_n{n}"), dl, C2_TOL);
        }
        Ok(())
    }

    fn c3(&mut self, c: &mut Checks) -> Result<()> {
        let p = EllipticParams::default();
        let v = C3_VELOCITY;
        for n in C23_GRIDS {
            let g = GridSpec::new(n, self.config.length)?;
            let u0 = VectorField::constant(g, v);
            let t = 1.0;
            let l = last(lagrangian(&DensityState::uniform(g), &u0, &p, C23_DT, t, usize::MAX)?);
            let dw = l.w.sub(&VectorField::constant(g, v.map(|x| t * x))).max_abs();
            c.le(&format!("flow_map_error_n{n}"), dw, C3_TOL);
            let rec = reconstruct_eulerian(&l, &DensityState::uniform(g))?;
            c.le(&format!("lagrangian_density_error_n{n}"), rec.rho_bar.max_abs(), C3_TOL);
            let e = last(eulerian(&ScalarField::zeros(g), &u0, &p, C23_DT, t, usize::MAX)?);
            let de = e.u.sub(&u0).max_abs().max(e.rho_bar.max_abs());
            c.le(&format!("eulerian_error_n{n}"), de, C3_TOL);
        }
        Ok(())
    }

    fn c4(&mut self, c: &mut Checks) -> Result<()> {
        let g = GridSpec::new(C4_N, self.config.length)?;
        let (rho, u) = smooth_data(&g, 0.1, C4_WAVENUMBER);
        let rho0 = DensityState::new(rho.clone())?;
        let p = EllipticParams {
            newton_tol: C4_NEWTON_TOL,
            ..EllipticParams::default()
        };
        let t = 1.0;
        let re = last(eulerian(&rho, &u, &p, C4_REFERENCE_DT, t, usize::MAX)?);
        let rl = last(lagrangian(&rho0, &u, &p, C4_REFERENCE_DT, t, usize::MAX)?);
        let mut ee = vec![];
        let mut el = vec![];
        for dt in C4_STEPS {
            let e = last(eulerian(&rho, &u, &p, dt, t, usize::MAX)?);
            let l = last(lagrangian(&rho0, &u, &p, dt, t, usize::MAX)?);
            ee.push(sobolev_norm(&e.u.sub(&re.u), 0.0)? + sobolev_norm(&e.rho_bar.sub(&re.rho_bar), 0.0)?);
            el.push(sobolev_norm(&l.w.sub(&rl.w), 0.0)? + sobolev_norm(&l.v.sub(&rl.v), 0.0)?);
        }
        for (name, errs) in [("eulerian", &ee), ("lagrangian", &el)] {
            for (i, e) in errs.iter().enumerate() {
                c.metric(&format!("{name}_error_dt{}", C4_STEPS[i]), *e);
            }
            for i in 0..errs.len() - 1 {
                c.within(&format!("{name}_order_{}", i + 1), (errs[i] / errs[i + 1]).log2(), C4_ORDER);
            }
        }
        Ok(())
    }

    /// Criteria 5 and 6 share one pair of runs.
    fn c56(&mut self, c5: &mut Checks, c6: &mut Checks, want5: bool) -> Result<()> {
        let g = GridSpec::new(C5_N, self.config.length)?;
        let (rho, u) = smooth_data(&g, 0.1, 1.0);
        let rho0 = DensityState::new(rho.clone())?;
        let omega0 = calculus::curl(&u);
        let p = EllipticParams::default();
        let es = eulerian(&rho, &u, &p, C5_DT, C5_T, C5_OUTPUT_EVERY)?;
        let ls = lagrangian(&rho0, &u, &p, C5_DT, C5_T, C5_OUTPUT_EVERY)?;
        if es.len() != ls.len() {
            bail!("output times differ: {} Eulerian, {} Lagrangian", es.len(), ls.len());
        }
        let mut erecs = vec![];
        let mut lrecs = vec![];
        let mut worst_u: f64 = 0.0;
        let mut final_u = f64::NAN;
        let (mut dens, mut vort, mut pd, mut pv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (e, l) in es.iter().zip(&ls) {
            erecs.push(eulerian_diagnostics(e, &p, s3())?);
            let (lr, rec) = lagrangian_diagnostics(l, &rho0, &omega0, &p, s3())?;
            let paired = paired_diagnostics(e, l, &rho0, &omega0, &p, s3())?;
            final_u = sobolev_norm(&e.u.sub(&rec.u), 3.0)?;
            worst_u = worst_u.max(final_u);
            dens = dens.max(lr.density_transport_residual.unwrap_or(f64::NAN));
            vort = vort.max(lr.vorticity_transport_residual.unwrap_or(f64::NAN));
            pd = pd.max(paired.density_transport_residual.unwrap_or(f64::NAN));
            pv = pv.max(paired.vorticity_transport_residual.unwrap_or(f64::NAN));
            lrecs.push(lr);
        }
        if want5 {
            write_records(&self.dir.join("diagnostics_eulerian.csv"), &erecs)?;
            write_records(&self.dir.join("diagnostics_lagrangian.csv"), &lrecs)?;
        }
        c5.le("u_hs_difference_at_T", final_u, C5_TOL);
        c5.metric("u_hs_difference_max", worst_u);
        c6.le("density_residual_max", dens, C6_DENSITY_TOL);
        c6.le("vorticity_residual_max", vort, C6_VORTICITY_TOL);
        c6.metric("paired_density_residual_max", pd);
        c6.metric("paired_vorticity_residual_max", pv);
        c6.metric("output_times", es.len() as f64);
        Ok(())
    }

    fn c7(&mut self, c: &mut Checks) -> Result<()> {
        let g = GridSpec::new(C7_N, self.config.length)?;
        let (rho, u) = smooth_data(&g, 0.1, 1.0);
        let rho0 = DensityState::new(rho.clone())?;
        let p = EllipticParams::default();
        let init = EulerianState::new(rho.clone(), u.clone(), 0.0)?;
        let e0 = eulerian_energy(&init, &p)?;
        let m0 = mass(&rho0);
        let drifts = |dt: f64| -> Result<(f64, f64, f64, f64)> {
            let e = last(eulerian(&rho, &u, &p, dt, 1.0, usize::MAX)?);
            let l = last(lagrangian(&rho0, &u, &p, dt, 1.0, usize::MAX)?);
            let rec = reconstruct_eulerian(&l, &rho0)?;
            Ok((
                (mass(&e.density()?) - m0) / m0,
                (mass(&rec.density()?) - m0) / m0,
                (eulerian_energy(&e, &p)? - e0) / e0,
                (lagrangian_energy(&l, &rho0, &p)? - e0) / e0,
            ))
        };
        let (me, ml, ee, el) = drifts(C7_DT)?;
        c.le("eulerian_mass_drift", me.abs(), C7_MASS_TOL);
        c.le("lagrangian_mass_drift", ml.abs(), C7_MASS_TOL);
        c.le("eulerian_energy_drift", ee.abs(), C7_ENERGY_TOL);
        c.le("lagrangian_energy_drift", el.abs(), C7_ENERGY_TOL);
        let coarse = C7_ORDER_STEPS.iter().map(|&dt| drifts(dt)).collect::<Result<Vec<_>>>()?;
        for (name, pick) in [("eulerian", 2usize), ("lagrangian", 3)] {
            let d: Vec<f64> = coarse
                .iter()
                .map(|r| [r.0, r.1, r.2, r.3][pick].abs())
                .collect();
            for (i, v) in d.iter().enumerate() {
                c.metric(&format!("{name}_energy_drift_dt{}", C7_ORDER_STEPS[i]), *v);
            }
            for i in 0..d.len() - 1 {
                c.ge(&format!("{name}_drift_order_{}", i + 1), (d[i] / d[i + 1]).log2(), C7_MIN_ORDER);
            }
        }
        Ok(())
    }

    fn c8(&mut self, c: &mut Checks) -> Result<()> {
        let g = GridSpec::new(C8_N, self.config.length)?;
        let gate = convention_gate(&g)?;
        c.require("gate reproduces the resolved conventions", gate.conventions == Conventions::RESOLVED);
        let sign = gate.conventions.fourier_sign;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..C8_FIELDS {
            let w = random_band_limited(&g, &mut rng);
            let b = apply_b(&w).spectra();
            let m = apply_multiplier(&w, |xi| {
                let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                AVariant::Printed
                    .multiplier(xi.map(|x| sign * x))
                    .map(|row| row.map(|v| v * (1.0 + k2)))
            })
            .spectra();
            let ws = w.spectra();
            let mut scale: f64 = 0.0;
            let mut diff: f64 = 0.0;
            for idx in 0..g.len() {
                let xi = symbol_wavevector(&g, idx);
                let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                for a in 0..3 {
                    scale = scale.max((1.0 + k2) * ws[a].data()[idx].norm());
                    diff = diff.max((b[a].data()[idx] - m[a].data()[idx]).norm());
                }
            }
            worst = worst.max(diff / scale);
        }
        c.le("b_vs_ma_modewise", worst, C8_MODE_TOL);

        let series = SeriesParams::default();
        let mut exact = true;
        for t in [1.0, 0.7] {
            let k = kernel_k(t, [0.0; 3], &series)?.value;
            for (i, row) in k.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    exact &= v.re == if i == j { t } else { 0.0 } && v.im == 0.0;
                }
            }
        }
        c.require("K(0) = T Id exactly", exact);

        let q = 1.0 / unit(&g);
        let u = VectorField::from_fn(g, |x| {
            let x = x.map(|v| q * v);
            [0.6 * x[1].sin() + 0.3 * x[0].cos(), 0.5 * (x[2] + x[0]).cos(), 0.4 * (x[0] - x[1]).sin()]
        });
        let r = ScalarField::from_fn(g, |x| {
            let x = x.map(|v| q * v);
            0.5 * x[0].cos() + 0.3 * (x[1] + x[2]).sin()
        });
        let t = 1.0;
        let lin = linearized_flow_derivative(&u, &r, t, &series)?;
        let mut rem = vec![];
        for e in C8_EPS {
            let w = flow_displacement(&DensityState::new(r.scale(e))?, &u.scale(e), t, C8_DT, &tight())?;
            rem.push(sobolev_norm(&w.sub(&lin.scale(e)), 3.0)?);
        }
        for (i, v) in rem.iter().enumerate() {
            c.metric(&format!("gateaux_remainder_eps{}", C8_EPS[i]), *v);
        }
        for i in 0..rem.len() - 1 {
            let slope = (rem[i + 1] / rem[i]).ln() / (C8_EPS[i + 1] / C8_EPS[i]).ln();
            c.within(&format!("remainder_slope_{}", i + 1), slope, C8_SLOPE);
        }
        Ok(())
    }

    fn c9(&mut self, c: &mut Checks) -> Result<()> {
        let started = Instant::now();
        let g = GridSpec::new(C9_N, self.config.length)?;
        let s = unit(&g);
        let (rho, u) = compact_base(&g, C9_BASE_AMPLITUDE);
        let base_rho = DensityState::new(rho)?;
        let mut search = SearchParams::for_grid(&g);
        search.bump_radius = C9_PROBE_RADIUS * s;
        search.bump_norm = C9_PROBE_NORM;
        search.dt = C9_DT;
        let t = 1.0;
        let probe = find_probe(&base_rho, &u, t, &search)?;
        c.metric("probe_m", probe.m_value);
        let x_star = probe.x_star;
        let probe_bump: Bump = (
            search.bump_radius,
            std::array::from_fn(|a| x_star[a] + probe.translation[a]),
            search.bump_norm,
            probe.h_u.clone(),
        );
        let config = NonuniformConfig {
            base_rho,
            base_u: u,
            probe,
            t,
            r_ball: C9_R,
            n_list: C9_N_LIST.to_vec(),
            dt: C9_DT,
            s: s3(),
            elliptic: EllipticParams::default(),
            witness_radius: s,
        };
        let rep = run_nonuniform(&config)?;
        write_records(&self.dir.join("experiments.csv"), &rep.records)?;
        c.metric("lipschitz", rep.lipschitz);
        c.metric("support_distance", rep.d.unwrap_or(f64::NAN));

        let xs: Vec<f64> = rep.records.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = rep.records.iter().map(|r| r.initial_distance.ln()).collect();
        let (slope, _, _) = epflow_core::experiments::analyticity::linear_fit(&xs, &ys);
        c.within("initial_distance_slope", slope, C9_SLOPE);
        c.require("every pair inside the ball", rep.records.iter().all(|r| r.in_ball));
        let v2 = rep.records[0].final_vorticity_distance;
        for r in &rep.records {
            let ratio = r.n as f64 * r.flow_separation / (rep.m / 2.0);
            c.metric(&format!("separation_ratio_n{}", r.n), ratio);
            c.metric(&format!("vorticity_fraction_n{}", r.n), r.final_vorticity_distance / v2);
        }
        let resolvable: Vec<_> = rep.records.iter().filter(|r| !r.resolution_limited).collect();
        let cells = 2.0 * g.spacing();
        if resolvable.is_empty() {
            let needed = rep.records[0].r_n;
            c.record(
                false,
                format!(
                    "no resolvable n: r_n <= {needed:.2e} while {MIN_RADIUS_CELLS} cells = {cells:.4}"
                ),
            );
        }
        for r in &resolvable {
            let ratio = r.n as f64 * r.flow_separation / (rep.m / 2.0);
            c.within(
                &format!("separation_ratio_n{}", r.n),
                ratio,
                (1.0 / C9_SEPARATION_FACTOR, C9_SEPARATION_FACTOR),
            );
            c.ge(
                &format!("vorticity_fraction_n{}", r.n),
                r.final_vorticity_distance / v2,
                C9_VORTICITY_FRACTION,
            );
        }
        let limited = rep.records.len() - resolvable.len();
        if limited > 0 {
            c.note(format!("{limited} resolution-limited n excluded"));
        }
        c.seconds("runtime", started.elapsed().as_secs_f64(), C9_SECONDS);
        let mut bumps = vec![probe_bump];
        bumps.extend(rep.bumps.into_iter().map(|(radius, w)| (radius, x_star, C9_R / 2.0, w)));
        self.bumps = Some(bumps);
        Ok(())
    }

    fn c10(&mut self, c: &mut Checks) -> Result<()> {
        let g = GridSpec::new(C10_N, self.config.length)?;
        let (r, u) = analytic_data(&g, 0.1);
        let rho = DensityState::new(r)?;
        let labels: Vec<[f64; 3]> = C10_LABELS.iter().map(|l| l.map(|v| v * unit(&g))).collect();
        let params = AnalyticityParams::default();
        let reps = run_analyticity(&rho, &u, &labels, &params)?;
        write_records(&self.dir.join("analyticity.csv"), &reps.iter().map(AnalyticitySummary).collect::<Vec<_>>())?;
        write_records(&self.dir.join("chebyshev.csv"), &chebyshev_rows(&reps))?;
        for (i, rep) in reps.iter().enumerate() {
            c.require(&format!("label {i} nontrivial"), !rep.trivially_analytic);
            c.require(&format!("label {i} reaches the floor"), rep.fit_last + 1 < rep.coefficients.len());
            c.ge(&format!("r_squared_label{i}"), rep.r_squared, C10_MIN_R2);
            c.metric(&format!("decay_rate_label{i}"), rep.decay_rate);
        }
        let uniform = DensityState::uniform(g);
        for (name, field, from) in [
            ("equilibrium", VectorField::zeros(g), 1usize),
            ("translation", VectorField::constant(g, C3_VELOCITY), 2),
        ] {
            let reps = run_analyticity(&uniform, &field, &labels, &params)?;
            if from == 2 {
                // c_1 = (T/2)|c| for x0 + t c on [0, T]
                let c1 = reps
                    .iter()
                    .map(|r| (r.coefficients[1] - 0.5 * params.t * norm3(C3_VELOCITY)).abs())
                    .fold(0.0, f64::max);
                c.le("translation_c1_error", c1, C10_DEGENERATE_TOL);
            }
            let tail = reps
                .iter()
                .flat_map(|r| r.coefficients[from..].iter().copied())
                .fold(0.0, f64::max);
            c.le(&format!("{name}_tail_max"), tail, C10_DEGENERATE_TOL);
            c.require(&format!("{name} trivially analytic"), reps.iter().all(|r| r.trivially_analytic));
        }
        Ok(())
    }

    fn c11(&mut self, c: &mut Checks) -> Result<()> {
        let g = GridSpec::new(C9_N, self.config.length)?;
        let s = s3();
        let bumps: Vec<Bump> = match self.bumps.take() {
            Some(b) => b,
            None => {
                let center = g.node(g.index(C9_N / 2, C9_N / 2, C9_N / 2));
                [2.0, 3.0, 4.0, 6.0]
                    .iter()
                    .map(|cells| -> Result<_> {
                        let radius = cells * g.spacing();
                        let spec = BumpSpec { center, radius, target_norm: C9_R / 2.0, s };
                        Ok((radius, center, C9_R / 2.0, make_bump(&g, &spec)?))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let (mut div, mut norm_err, mut leak) = (0.0f64, 0.0f64, 0.0f64);
        for (radius, center, target, w) in &bumps {
            div = div.max(calculus::divergence(w).max_abs());
            norm_err = norm_err.max((sobolev_norm(w, s.value())? - target).abs() / target);
            leak = leak.max(support_leak(w, *center, *radius));
        }
        c.le("divergence_max", div, C11_DIV_TOL);
        c.le("norm_relative_error", norm_err, C11_NORM_TOL);
        c.le("support_leak_max", leak, C11_SUPPORT_TOL);
        let pairs: Vec<(f64, VectorField)> = bumps.iter().map(|(r, _, _, w)| (*r, w.clone())).collect();
        let loc = norm_localization_check(&pairs, s)?;
        let rows: Vec<Vec<String>> = loc
            .entries
            .iter()
            .map(|e| {
                vec![
                    float(e.radius),
                    float(e.l2),
                    float(e.linf),
                    float(e.l2_bound),
                    float(e.hs_norm),
                    float(e.dw_norm),
                    float(e.curl_norm),
                    float(e.c_hat),
                ]
            })
            .collect();
        write_table(
            &self.dir.join("localization.csv"),
            &["radius", "l2", "linf", "l2_bound", "hs_norm", "dw_norm", "curl_norm", "c_hat"],
            &rows,
        )?;
        c.require("L2 smallness inequality for every bump", loc.l2_inequality_holds);
        c.metric("dw_ratio_min", loc.dw_ratio_min);
        c.metric("c_hat_spread", loc.c_hat_spread);
        c.metric("bumps", bumps.len() as f64);
        Ok(())
    }
}

fn run_one(suite: &mut Suite, id: u32, want: &[u32]) -> Vec<CriterionOutcome> {
    let t = Instant::now();
    let mut c = Checks::new(suite.injected(id));
    let result = match id {
        1 => suite.c1(&mut c),
        2 => suite.c2(&mut c),
        3 => suite.c3(&mut c),
        4 => suite.c4(&mut c),
        5 | 6 => {
            let mut c6 = Checks::new(suite.injected(6));
            let r = suite.c56(&mut c, &mut c6, want.contains(&5));
            let secs = t.elapsed().as_secs_f64();
            let mut out = vec![];
            let (c5, c6) = (c, c6);
            for (cid, mut cc) in [(5, c5), (6, c6)] {
                if !want.contains(&cid) {
                    continue;
                }
                if let Err(e) = &r {
                    cc.record(false, format!("error: {e:#}"));
                }
                out.push(finish(cid, cc, secs));
            }
            return out;
        }
        7 => suite.c7(&mut c),
        8 => suite.c8(&mut c),
        9 => suite.c9(&mut c),
        10 => suite.c10(&mut c),
        11 => suite.c11(&mut c),
        _ => unreachable!("criterion 12 runs separately"),
    };
    if let Err(e) = result {
        c.record(false, format!("error: {e:#}"));
    }
    vec![finish(id, c, t.elapsed().as_secs_f64())]
}

fn finish(id: u32, c: Checks, seconds: f64) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name: NAMES[id as usize - 1],
        pass: c.pass,
        detail: c.parts.join("; "),
        metrics: c.metrics,
        seconds,
    }
}

/// Criteria 1 to 11 as selected, writing CSVs into `dir`.
pub fn run_criteria(config: &RunConfig, dir: &Path, mut report: impl FnMut(&CriterionOutcome)) -> Result<Vec<CriterionOutcome>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut suite = Suite {
        config,
        dir,
        bumps: None,
    };
    let want: Vec<u32> = config.criteria.iter().copied().filter(|&c| c != 12).collect();
    let mut out: Vec<CriterionOutcome> = vec![];
    for id in 1..=11u32 {
        if !want.contains(&id) || (id == 6 && want.contains(&5)) {
            continue;
        }
        for o in run_one(&mut suite, id, &want) {
            report(&o);
            out.push(o);
        }
    }
    let rows: Vec<Vec<String>> = out
        .iter()
        .flat_map(|o| o.metrics.iter().map(move |(k, v)| vec![o.id.to_string(), k.clone(), float(*v)]))
        .collect();
    if !rows.is_empty() {
        write_table(&dir.join("acceptance.csv"), &["criterion", "metric", "value"], &rows)?;
    }
    Ok(out)
}

/// Sorted CSV file names in `dir`.
pub fn csv_files(dir: &Path) -> Result<Vec<String>> {
    let mut names = vec![];
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name.ends_with(".csv") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Byte comparison of the CSVs of two run directories.
pub fn compare_csvs(a: &Path, b: &Path) -> Result<Vec<String>> {
    let (na, nb) = (csv_files(a)?, csv_files(b)?);
    let mut problems = vec![];
    if na != nb {
        problems.push(format!("CSV sets differ: {na:?} vs {nb:?}"));
    }
    for name in na.iter().filter(|n| nb.contains(n)) {
        if std::fs::read(a.join(name))? != std::fs::read(b.join(name))? {
            problems.push(format!("{name} differs"));
        }
    }
    if na.is_empty() {
        problems.push("no CSV output to compare".into());
    }
    Ok(problems)
}

/// Criterion 12: against `reference` when given, else against a repeat of
/// the selected criteria in `dir/repeat`.
pub fn determinism(config: &RunConfig, dir: &Path, reference: Option<&Path>, report: impl FnMut(&CriterionOutcome)) -> CriterionOutcome {
    let t = Instant::now();
    let mut c = Checks::new(config.inject == Some(12));
    let outcome = (|| -> Result<Vec<String>> {
        match reference {
            Some(r) => compare_csvs(dir, r),
            None => {
                let repeat = dir.join("repeat");
                run_criteria(config, &repeat, report)?;
                compare_csvs(dir, &repeat)
            }
        }
    })();
    match outcome {
        Ok(problems) if problems.is_empty() => {
            let n = csv_files(dir).map(|v| v.len()).unwrap_or(0);
            c.require(&format!("{n} CSV files byte-identical"), true);
        }
        Ok(problems) => c.record(false, problems.join("; ")),
        Err(e) => c.record(false, format!("error: {e:#}")),
    }
    finish(12, c, t.elapsed().as_secs_f64())
}

pub fn summary_error(outcomes: &[CriterionOutcome]) -> Option<anyhow::Error> {
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{} ({})", o.id, o.name))
        .collect();
    if failed.is_empty() {
        None
    } else {
        Some(anyhow!("failed criteria: {}", failed.join(", ")))
    }
}
