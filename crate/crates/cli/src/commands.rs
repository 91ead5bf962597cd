//! The five commands. Each writes into the configured output directory and
//! the manifest is written on every exit path.

use crate::config::{Command, FormulationChoice, RunConfig};
use crate::criteria::{determinism, random_labels, run_criteria, summary_error, CriterionOutcome};
use crate::manifest::RunDir;
use crate::presets::{initial_data, unit};
use crate::records::{chebyshev_rows, float, write_records, write_table, AnalyticitySummary};
use crate::snapshot::{write_field, Field, Snapshot};
use anyhow::{Context, Result};
use epflow_core::dynamics::{
    eulerian_diagnostics, integrate_eulerian, integrate_lagrangian, lagrangian_diagnostics, EulerianState,
    FlowMapState, TimeStepper,
};
use epflow_core::elliptic::EllipticParams;
use epflow_core::experiments::{norm_localization_check, run_analyticity, run_nonuniform, AnalyticityParams, NonuniformConfig};
use epflow_core::linearized::{convention_gate, find_probe, linearized_flow_derivative, KernelLabel, MultiplierKernel, SearchParams, SeriesParams};
use epflow_core::spectral::calculus;
use epflow_core::{ScalarField, SobolevIndex, VectorField};

fn elliptic(config: &RunConfig) -> EllipticParams {
    EllipticParams {
        newton_tol: config.newton_tol,
        ..EllipticParams::default()
    }
}

fn sobolev(config: &RunConfig) -> Result<SobolevIndex> {
    Ok(SobolevIndex::new(config.s)?)
}

fn scalar(run: &mut RunDir, name: &str, f: &ScalarField, time: f64) -> Result<()> {
    let path = run.file(name);
    write_field(&path, &Snapshot { field: Field::Scalar(f.clone()), time })
}

fn vector(run: &mut RunDir, name: &str, f: &VectorField, time: f64) -> Result<()> {
    let path = run.file(name);
    write_field(&path, &Snapshot { field: Field::Vector(f.clone()), time })
}

fn solve(config: &RunConfig, run: &mut RunDir) -> Result<()> {
    let (rho0, u0) = initial_data(config)?;
    scalar(run, "rho_bar_0.eplf", rho0.rho_bar(), 0.0)?;
    vector(run, "u_0.eplf", &u0, 0.0)?;
    let p = elliptic(config);
    let s = sobolev(config)?;
    let stepper = TimeStepper::new(config.dt)?;
    stepper.steps_for(config.t)?;
    let mut failure = None;
    if config.formulation != FormulationChoice::Lagrangian {
        let traj = run.stage("eulerian", |_| {
            let init = EulerianState::new(rho0.rho_bar().clone(), u0.clone(), 0.0)?;
            Ok(integrate_eulerian(init, &p, &stepper, config.t, config.output_every))
        })?;
        let recs = run.stage("eulerian diagnostics", |_| {
            traj.states.iter().map(|st| Ok(eulerian_diagnostics(st, &p, s)?)).collect::<Result<Vec<_>>>()
        })?;
        let path = run.file("diagnostics_eulerian.csv");
        write_records(&path, &recs)?;
        let last = traj.last();
        scalar(run, "rho_bar_T_eulerian.eplf", &last.rho_bar, last.t)?;
        vector(run, "u_T_eulerian.eplf", &last.u, last.t)?;
        failure = failure.or(traj.error.map(|e| anyhow::Error::from(e).context("Eulerian run")));
    }
    if config.formulation != FormulationChoice::Eulerian {
        let traj = run.stage("lagrangian", |_| {
            Ok(integrate_lagrangian(FlowMapState::at_rest_map(&u0), &rho0, &p, &stepper, config.t, config.output_every))
        })?;
        let omega0 = calculus::curl(&u0);
        let (recs, last_eul) = run.stage("lagrangian diagnostics", |_| {
            let mut recs = vec![];
            let mut last = None;
            for st in &traj.states {
                let (r, e) = lagrangian_diagnostics(st, &rho0, &omega0, &p, s)?;
                recs.push(r);
                last = Some(e);
            }
            Ok((recs, last.expect("at least the initial state")))
        })?;
        let path = run.file("diagnostics_lagrangian.csv");
        write_records(&path, &recs)?;
        let last = traj.last();
        vector(run, "w_T.eplf", &last.w, last.t)?;
        vector(run, "v_T.eplf", &last.v, last.t)?;
        scalar(run, "rho_bar_T_lagrangian.eplf", &last_eul.rho_bar, last.t)?;
        vector(run, "u_T_lagrangian.eplf", &last_eul.u, last.t)?;
        failure = failure.or(traj.error.map(|e| anyhow::Error::from(e).context("Lagrangian run")));
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn linearize(config: &RunConfig, run: &mut RunDir) -> Result<()> {
    let g = config.grid();
    let gate = run.stage("convention gate", |_| Ok(convention_gate(&g)?))?;
    let mut rows = vec![];
    for (sign, r) in &gate.fourier {
        rows.push(vec!["fourier_sign".into(), String::new(), float(*sign), float(*r)]);
    }
    for (variant, sign, r) in &gate.a_block {
        rows.push(vec!["velocity_block".into(), variant.name().into(), float(*sign), float(*r)]);
    }
    for (sign, r) in &gate.rho_block {
        rows.push(vec!["density_block".into(), String::new(), float(*sign), float(*r)]);
    }
    let path = run.file("gate.csv");
    write_table(&path, &["block", "variant", "sign", "residual"], &rows)?;

    let mut rows = vec![];
    for (name, label) in [
        ("m_A", KernelLabel::MA),
        ("K", KernelLabel::K),
        ("K_tilde", KernelLabel::KTilde),
        ("helmholtz", KernelLabel::Helmholtz),
    ] {
        let k = MultiplierKernel::new(label, config.t);
        rows.push(vec![name.into(), float(k.sup_norm(&g)?), float(k.reality_defect(&g)?)]);
    }
    let path = run.file("kernels.csv");
    write_table(&path, &["kernel", "sup_norm", "reality_defect"], &rows)?;

    let (rho0, u0) = initial_data(config)?;
    let d = run.stage("linearized flow", |_| {
        Ok(linearized_flow_derivative(&u0, rho0.rho_bar(), config.t, &SeriesParams::default())?)
    })?;
    vector(run, "dphi_T.eplf", &d, config.t)
}

fn nonuniform(config: &RunConfig, run: &mut RunDir) -> Result<()> {
    let g = config.grid();
    let (rho, u) = initial_data(config)?;
    let mut search = SearchParams::for_grid(&g);
    search.probe_floor = config.probe_floor;
    if let Some(d) = config.separation {
        search.separation = d;
    }
    search.bump_radius = config.probe_radius.unwrap_or(1.5 * unit(&g));
    search.bump_norm = config.probe_norm;
    search.s = sobolev(config)?;
    search.dt = config.dt;
    search.elliptic = elliptic(config);
    let probe = run.stage("probe search", |_| Ok(find_probe(&rho, &u, config.t, &search)?))?;
    vector(run, "probe_h_u.eplf", &probe.h_u, 0.0)?;
    let nc = NonuniformConfig {
        base_rho: rho,
        base_u: u,
        probe,
        t: config.t,
        r_ball: config.r_ball,
        n_list: config.n_list.clone(),
        dt: config.dt,
        s: sobolev(config)?,
        elliptic: elliptic(config),
        witness_radius: unit(&g),
    };
    let rep = run.stage("experiments", |_| Ok(run_nonuniform(&nc)?))?;
    let path = run.file("experiments.csv");
    write_records(&path, &rep.records)?;
    let loc = norm_localization_check(&rep.bumps, sobolev(config)?)?;
    let rows: Vec<Vec<String>> = loc
        .entries
        .iter()
        .map(|e| [e.radius, e.l2, e.linf, e.l2_bound, e.hs_norm, e.dw_norm, e.curl_norm, e.c_hat].map(float).to_vec())
        .collect();
    let path = run.file("localization.csv");
    write_table(&path, &["radius", "l2", "linf", "l2_bound", "hs_norm", "dw_norm", "curl_norm", "c_hat"], &rows)?;
    let summary = vec![vec![
        float(rep.m),
        float(rep.h_norm),
        float(rep.lipschitz),
        rep.d.map(float).unwrap_or_default(),
        nc.probe.x_star.map(float).join(" "),
    ]];
    let path = run.file("probe.csv");
    write_table(&path, &["m", "h_norm", "lipschitz", "support_distance", "x_star"], &summary)
}

fn analyticity(config: &RunConfig, run: &mut RunDir) -> Result<()> {
    let g = config.grid();
    let (rho, u) = initial_data(config)?;
    let labels = random_labels(&g, config.labels, config.seed);
    let params = AnalyticityParams {
        t: config.t,
        degree: config.degree,
        dt: config.dt,
        elliptic: elliptic(config),
    };
    let reps = run.stage("trajectories", |_| Ok(run_analyticity(&rho, &u, &labels, &params)?))?;
    let path = run.file("analyticity.csv");
    write_records(&path, &reps.iter().map(AnalyticitySummary).collect::<Vec<_>>())?;
    let path = run.file("chebyshev.csv");
    write_records(&path, &chebyshev_rows(&reps))
}

fn selftest(config: &RunConfig, run: &mut RunDir) -> Result<()> {
    let dir = run.path.clone();
    let print = |o: &CriterionOutcome| println!("{}", o.line());
    let mut outcomes = run.stage("criteria", |_| run_criteria(config, &dir, print))?;
    if config.criteria.contains(&12) {
        let repeat = |o: &CriterionOutcome| println!("  repeat: {}", o.line());
        let c12 = run.stage("determinism", |_| Ok(determinism(config, &dir, config.reference.as_deref(), repeat)))?;
        println!("{}", c12.line());
        outcomes.push(c12);
    }
    for name in crate::criteria::csv_files(&dir)? {
        run.file(&name);
    }
    run.set_acceptance(outcomes.iter().map(CriterionOutcome::entry).collect());
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("selftest: {passed}/{} criteria passed", outcomes.len());
    match summary_error(&outcomes) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Runs the configured command; the manifest is written whatever happens.
pub fn execute(config: &RunConfig) -> Result<()> {
    let mut run = RunDir::create(config)?;
    let outcome = match config.command {
        Command::Solve => solve(config, &mut run),
        Command::Linearize => linearize(config, &mut run),
        Command::Nonuniform => nonuniform(config, &mut run),
        Command::Analyticity => analyticity(config, &mut run),
        Command::Selftest => selftest(config, &mut run),
    };
    run.finish(&outcome).context("cannot write manifest")?;
    outcome
}
