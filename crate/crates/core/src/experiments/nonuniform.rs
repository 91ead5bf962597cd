//! Pairs of initial data whose distance shrinks like `1/n` while the
//! solutions at time `T` stay apart.

use super::bump::{estimate_lipschitz, make_bump, BumpSpec};
use crate::dynamics::diagnostics::reconstruct_eulerian;
use crate::dynamics::{integrate_lagrangian, EulerianState, FlowMapState, TimeStepper};
use crate::elliptic::{DensityState, EllipticParams};
use crate::error::{Error, Result};
use crate::linearized::probe::{is_equilibrium, support_nodes};
use crate::linearized::ProbeData;
use crate::spectral::{calculus, sobolev_norm, GridSpec, ScalarField, SobolevIndex, VectorField};

/// Bumps narrower than this many grid cells are not resolved.
pub const MIN_RADIUS_CELLS: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct NonuniformConfig {
    pub base_rho: DensityState,
    pub base_u: VectorField,
    pub probe: ProbeData,
    pub t: f64,
    /// Data-space ball radius `R`; every bump has `‖w_n‖_s = R/2`.
    pub r_ball: f64,
    pub n_list: Vec<usize>,
    pub dt: f64,
    pub s: SobolevIndex,
    pub elliptic: EllipticParams,
    /// Radius of the ball around `x*` used by the support witness.
    pub witness_radius: f64,
}

impl NonuniformConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_ball > 0.0 && self.r_ball.is_finite()) {
            return Err(Error::InvalidParameter(format!("R = {} must be positive", self.r_ball)));
        }
        if self.n_list.is_empty() || self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "n_list {:?} must be nonempty, positive and increasing",
                self.n_list
            )));
        }
        if !(self.t > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon {} must be positive", self.t)));
        }
        if !(self.probe.m_value > 0.0) {
            return Err(Error::InvalidParameter("probe value m must be positive".into()));
        }
        let g = *self.base_u.grid();
        g.check_same(self.base_rho.grid(), "nonuniform base density")?;
        g.check_same(self.probe.h_u.grid(), "nonuniform probe")?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub n: usize,
    /// Nominal `m/(8nL)`.
    pub r_n: f64,
    /// Radius actually used, `max(r_n, MIN_RADIUS_CELLS·Δx)`.
    pub radius_used: f64,
    pub resolution_limited: bool,
    pub initial_distance: f64,
    pub final_vorticity_distance: f64,
    pub final_solution_distance: f64,
    pub flow_separation: f64,
    pub predicted_separation: f64,
    /// Whether both data sets lie in the `R`-ball around the base.
    pub in_ball: bool,
    /// Smallest distance between the images of `supp u0` and the witness
    /// ball over both runs; `None` when `u0 = 0`.
    pub witness_distance: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct NonuniformReport {
    pub m: f64,
    pub h_norm: f64,
    pub lipschitz: f64,
    /// Distance `d` between the images of `supp u0` and the witness ball
    /// under the base flow.
    pub d: Option<f64>,
    pub records: Vec<ExperimentRecord>,
    /// `(radius_used, w_n)` per record.
    pub bumps: Vec<(f64, VectorField)>,
}

/// `|||(ρ, u)||| = ‖ρ‖_{s−1} + ‖u‖_s`.
pub fn data_norm(rho: &ScalarField, u: &VectorField, s: SobolevIndex) -> Result<f64> {
    Ok(sobolev_norm(rho, s.value() - 1.0)? + sobolev_norm(u, s.value())?)
}

fn final_state(rho: &DensityState, u: &VectorField, t: f64, dt: f64, params: &EllipticParams) -> Result<FlowMapState> {
    let stepper = TimeStepper::new(dt)?;
    let steps = stepper.steps_for(t)?;
    integrate_lagrangian(FlowMapState::at_rest_map(u), rho, params, &stepper, t, steps).into_result()
}

fn ball_nodes(g: &GridSpec, center: [f64; 3], radius: f64) -> Vec<usize> {
    (0..g.len())
        .filter(|&i| g.torus_distance(g.node(i), center) <= radius)
        .collect()
}

/// Smallest torus distance between the images of two node sets.
fn image_distance(state: &FlowMapState, a: &[usize], b: &[usize]) -> f64 {
    let g = *state.grid();
    let img = |i: usize| -> [f64; 3] {
        let p = g.node(i);
        let w = state.w.at(i);
        [p[0] + w[0], p[1] + w[1], p[2] + w[2]]
    };
    let pb: Vec<[f64; 3]> = b.iter().map(|&j| img(j)).collect();
    a.iter()
        .map(|&i| {
            let p = img(i);
            pb.iter().map(|q| g.torus_distance(p, *q)).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

fn displacement_gap(a: &FlowMapState, b: &FlowMapState, idx: usize) -> f64 {
    let (p, q) = (a.w.at(idx), b.w.at(idx));
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

fn solution_distance(a: &EulerianState, b: &EulerianState, s: SobolevIndex) -> Result<(f64, f64)> {
    let vort = sobolev_norm(&calculus::curl(&a.u).sub(&calculus::curl(&b.u)), s.value() - 1.0)?;
    let full = data_norm(&a.rho_bar.sub(&b.rho_bar), &a.u.sub(&b.u), s)?;
    Ok((vort, full))
}

pub fn run_nonuniform(config: &NonuniformConfig) -> Result<NonuniformReport> {
    config.validate()?;
    let g = *config.base_u.grid();
    let probe = &config.probe;
    let s = config.s;
    let m = probe.m_value;
    let h_norm = data_norm(&probe.h_rho, &probe.h_u, s)?;
    let x_star = probe.x_star;
    let xi = probe.x_star_index;
    let rho_with = |k: f64| DensityState::new(config.base_rho.rho_bar().axpy(k, &probe.h_rho));

    // Lipschitz constant from the base flow and the largest h-perturbation.
    let base = if is_equilibrium(&config.base_rho, &config.base_u) {
        FlowMapState::new(VectorField::zeros(g), VectorField::zeros(g), config.t)?
    } else {
        final_state(&config.base_rho, &config.base_u, config.t, config.dt, &config.elliptic)?
    };
    let inv0 = 1.0 / config.n_list[0] as f64;
    let pilot = final_state(
        &rho_with(inv0)?,
        &config.base_u.axpy(inv0, &probe.h_u),
        config.t,
        config.dt,
        &config.elliptic,
    )?;
    let lipschitz = estimate_lipschitz(&[&base, &pilot])?;

    let supp = support_nodes(&config.base_u);
    let ball = ball_nodes(&g, x_star, config.witness_radius);
    let d = (!supp.is_empty()).then(|| image_distance(&base, &supp, &ball));

    let floor = MIN_RADIUS_CELLS * g.spacing();
    let mut records = Vec::with_capacity(config.n_list.len());
    let mut bumps = Vec::with_capacity(config.n_list.len());
    for &n in &config.n_list {
        let nf = n as f64;
        let r_n = m / (8.0 * nf * lipschitz);
        let radius_used = r_n.max(floor);
        let w = make_bump(
            &g,
            &BumpSpec {
                center: x_star,
                radius: radius_used,
                target_norm: config.r_ball / 2.0,
                s,
            },
        )?;
        let u_a = config.base_u.add(&w);
        let u_b = u_a.axpy(1.0 / nf, &probe.h_u);
        let rho_b = rho_with(1.0 / nf)?;
        let initial_distance = data_norm(
            &rho_b.rho_bar().sub(config.base_rho.rho_bar()),
            &u_b.sub(&u_a),
            s,
        )?;
        let in_ball = data_norm(&ScalarField::zeros(g), &w, s)? <= config.r_ball
            && data_norm(&rho_b.rho_bar().sub(config.base_rho.rho_bar()), &u_b.sub(&config.base_u), s)? <= config.r_ball;

        let fa = final_state(&config.base_rho, &u_a, config.t, config.dt, &config.elliptic)?;
        let fb = final_state(&rho_b, &u_b, config.t, config.dt, &config.elliptic)?;
        let ea = reconstruct_eulerian(&fa, &config.base_rho)?;
        let eb = reconstruct_eulerian(&fb, &rho_b)?;
        let (final_vorticity_distance, final_solution_distance) = solution_distance(&ea, &eb, s)?;
        let witness_distance = (!supp.is_empty())
            .then(|| image_distance(&fa, &supp, &ball).min(image_distance(&fb, &supp, &ball)));
        records.push(ExperimentRecord {
            n,
            r_n,
            radius_used,
            resolution_limited: r_n < floor,
            initial_distance,
            final_vorticity_distance,
            final_solution_distance,
            flow_separation: displacement_gap(&fa, &fb, xi),
            predicted_separation: m / (2.0 * nf),
            in_ball,
            witness_distance,
        });
        bumps.push((radius_used, w));
    }
    Ok(NonuniformReport {
        m,
        h_norm,
        lipschitz,
        d,
        records,
        bumps,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationEntry {
    pub radius: f64,
    pub l2: f64,
    pub linf: f64,
    /// `‖w‖_∞ √(4πr³/3)`.
    pub l2_bound: f64,
    pub hs_norm: f64,
    /// `‖dw‖_{s−1}`.
    pub dw_norm: f64,
    /// `‖curl w‖_{s−1}`.
    pub curl_norm: f64,
    /// `‖curl w‖_{s−1} / ‖dw‖_{s−1}`.
    pub c_hat: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationReport {
    pub entries: Vec<LocalizationEntry>,
    pub l2_inequality_holds: bool,
    /// Smallest `‖dw‖_{s−1} / ‖w‖_s`.
    pub dw_ratio_min: f64,
    /// `(max ĉ − min ĉ) / mean ĉ`.
    pub c_hat_spread: f64,
}

pub fn norm_localization_check(bumps: &[(f64, VectorField)], s: SobolevIndex) -> Result<LocalizationReport> {
    if bumps.is_empty() {
        return Err(Error::InvalidParameter("localization check needs at least one bump".into()));
    }
    let sm1 = s.value() - 1.0;
    let mut entries = Vec::with_capacity(bumps.len());
    for (radius, w) in bumps {
        let l2 = sobolev_norm(w, 0.0)?;
        let linf = w.max_norm();
        let jac = calculus::jacobian(w);
        let mut dw2 = 0.0;
        for row in &jac {
            for f in row {
                dw2 += sobolev_norm(f, sm1)?.powi(2);
            }
        }
        let dw_norm = dw2.sqrt();
        let curl_norm = sobolev_norm(&calculus::curl(w), sm1)?;
        entries.push(LocalizationEntry {
            radius: *radius,
            l2,
            linf,
            l2_bound: linf * (4.0 * std::f64::consts::PI * radius.powi(3) / 3.0).sqrt(),
            hs_norm: sobolev_norm(w, s.value())?,
            dw_norm,
            curl_norm,
            c_hat: curl_norm / dw_norm,
        });
    }
    let c: Vec<f64> = entries.iter().map(|e| e.c_hat).collect();
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    let spread = (c.iter().cloned().fold(f64::MIN, f64::max) - c.iter().cloned().fold(f64::MAX, f64::min)) / mean;
    Ok(LocalizationReport {
        l2_inequality_holds: entries.iter().all(|e| e.l2 <= e.l2_bound),
        dw_ratio_min: entries.iter().map(|e| e.dw_norm / e.hs_norm).fold(f64::INFINITY, f64::min),
        c_hat_spread: spread,
        entries,
    })
}
