//! Probe direction `h = (0, h_u)` and point `x*` with `(dΨ_T(h))(x*) ≠ 0`.

use super::kernel::{linearized_flow_derivative, SeriesParams};
use crate::dynamics::{integrate_lagrangian, FlowMapState, TimeStepper};
use crate::elliptic::{DensityState, EllipticParams};
use crate::error::{Error, Result};
use crate::experiments::bump::{make_bump, BumpSpec};
use crate::spectral::{GridSpec, ScalarField, SobolevIndex, VectorField};

/// `|u| ≤ SUPPORT_TOL` counts as outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchParams {
    /// Required distance from `x*` to `supp u•`.
    pub separation: f64,
    pub probe_floor: f64,
    /// Candidate translations are multiples of this many cells.
    pub stride: usize,
    pub bump_radius: f64,
    /// `‖h_u‖_s`.
    pub bump_norm: f64,
    pub s: SobolevIndex,
    /// Step for the flow runs away from equilibrium.
    pub dt: f64,
    pub fd_step: f64,
    /// Flow runs tried, in order of the equilibrium kernel value.
    pub max_flow_candidates: usize,
    pub elliptic: EllipticParams,
    pub series: SeriesParams,
}

impl SearchParams {
    /// Defaults scaled to the box: separation `2L/(2π)`, radius `L/(2π)`.
    pub fn for_grid(grid: &GridSpec) -> Self {
        let unit = grid.length() / (2.0 * std::f64::consts::PI);
        Self {
            separation: 2.0 * unit,
            probe_floor: 1e-6,
            stride: 1,
            bump_radius: unit,
            bump_norm: 1.0,
            s: SobolevIndex::default(),
            dt: 1e-2,
            fd_step: 1e-4,
            max_flow_candidates: 3,
            elliptic: EllipticParams::default(),
            series: SeriesParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeData {
    pub h_rho: ScalarField,
    pub h_u: VectorField,
    pub x_star: [f64; 3],
    pub x_star_index: usize,
    /// Translation from the bump centered at `x*` to `h_u`.
    pub translation: [f64; 3],
    pub m_value: f64,
    pub base_rho: DensityState,
    pub base_u: VectorField,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Nodes where `|u| > SUPPORT_TOL`.
pub fn support_nodes(u: &VectorField) -> Vec<usize> {
    (0..u.grid().len()).filter(|&i| norm3(u.at(i)) > SUPPORT_TOL).collect()
}

/// Torus distance from `p` to the nearest support node, infinite if empty.
pub fn distance_to_support(grid: &GridSpec, support: &[usize], p: [f64; 3]) -> f64 {
    support
        .iter()
        .map(|&i| grid.torus_distance(grid.node(i), p))
        .fold(f64::INFINITY, f64::min)
}

/// First node farthest from the support; the box center when the support is empty.
fn choose_x_star(grid: &GridSpec, u: &VectorField) -> (usize, f64) {
    let support = support_nodes(u);
    let n = grid.n();
    if support.is_empty() {
        return (grid.index(n / 2, n / 2, n / 2), f64::INFINITY);
    }
    let mut best = (0, -1.0);
    for idx in 0..grid.len() {
        let d = distance_to_support(grid, &support, grid.node(idx));
        if d > best.1 {
            best = (idx, d);
        }
    }
    best
}

pub fn is_equilibrium(rho: &DensityState, u: &VectorField) -> bool {
    rho.rho_bar().max_abs() == 0.0 && u.max_abs() == 0.0
}

/// `W(T)` of the Lagrangian run from `(ρ, u)`.
pub fn flow_displacement(
    rho: &DensityState,
    u: &VectorField,
    t: f64,
    dt: f64,
    params: &EllipticParams,
) -> Result<VectorField> {
    let stepper = TimeStepper::new(dt)?;
    let steps = stepper.steps_for(t)?;
    let traj = integrate_lagrangian(FlowMapState::at_rest_map(u), rho, params, &stepper, t, steps);
    Ok(traj.into_result()?.w)
}

/// `|(dΨ_T(0, h_u))(x*)|` by central difference at the base.
pub fn directional_derivative_at(
    rho: &DensityState,
    u: &VectorField,
    h_u: &VectorField,
    x_star_index: usize,
    t: f64,
    search: &SearchParams,
) -> Result<f64> {
    let e = search.fd_step;
    let plus = flow_displacement(rho, &u.axpy(e, h_u), t, search.dt, &search.elliptic)?;
    let minus = flow_displacement(rho, &u.axpy(-e, h_u), t, search.dt, &search.elliptic)?;
    let d: [f64; 3] = std::array::from_fn(|a| (plus[a].values()[x_star_index] - minus[a].values()[x_star_index]) / (2.0 * e));
    Ok(norm3(d))
}

/// Probe value of a given `h_u`: the kernel at equilibrium, a flow
/// difference elsewhere.
pub fn probe_value(
    rho: &DensityState,
    u: &VectorField,
    h_u: &VectorField,
    x_star_index: usize,
    t: f64,
    search: &SearchParams,
) -> Result<f64> {
    if is_equilibrium(rho, u) {
        let k = linearized_flow_derivative(h_u, &ScalarField::zeros(*h_u.grid()), t, &search.series)?;
        Ok(norm3(k.at(x_star_index)))
    } else {
        directional_derivative_at(rho, u, h_u, x_star_index, t, search)
    }
}

pub fn find_probe(base_rho: &DensityState, base_u: &VectorField, t: f64, search: &SearchParams) -> Result<ProbeData> {
    let g = *base_u.grid();
    g.check_same(base_rho.grid(), "probe base density")?;
    let (xi, dist) = choose_x_star(&g, base_u);
    if !(dist > search.separation) {
        return Err(Error::InvalidParameter(format!(
            "no node is farther than {} from supp u (best {dist})",
            search.separation
        )));
    }
    let x_star = g.node(xi);
    let spec = BumpSpec {
        center: x_star,
        radius: search.bump_radius,
        target_norm: search.bump_norm,
        s: search.s,
    };
    let b = make_bump(&g, &spec)?;
    let kb = linearized_flow_derivative(&b, &ScalarField::zeros(g), t, &search.series)?;

    // (K b(· − a))(x*) = (K b)(x* − a): rank lattice nodes p = x* − a.
    let n = g.n();
    let stride = search.stride.max(1);
    let (i0, j0, k0) = g.unindex(xi);
    let mut candidates: Vec<(f64, usize)> = (0..g.len())
        .filter(|&p| {
            let (i, j, k) = g.unindex(p);
            [(i, i0), (j, j0), (k, k0)].iter().all(|&(a, b)| ((a + n - b) % n) % stride == 0)
        })
        .map(|p| (norm3(kb.at(p)), p))
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let h = g.spacing();
    let translation_of = |p: usize| -> [f64; 3] {
        let (i, j, k) = g.unindex(p);
        let cells = |a: usize, b: usize| -> f64 {
            let d = (b + n - a) % n;
            if d > n / 2 {
                d as f64 - n as f64
            } else {
                d as f64
            }
        };
        [cells(i, i0) * h, cells(j, j0) * h, cells(k, k0) * h]
    };
    let equilibrium = is_equilibrium(base_rho, base_u);
    let tries = if equilibrium { 1 } else { search.max_flow_candidates.max(1) };
    let mut tried = vec![];
    for &(kval, p) in candidates.iter().take(tries) {
        let a = translation_of(p);
        tried.push(a);
        let h_u = make_bump(
            &g,
            &BumpSpec {
                center: std::array::from_fn(|c| x_star[c] + a[c]),
                ..spec
            },
        )?;
        let m = if equilibrium {
            kval
        } else {
            directional_derivative_at(base_rho, base_u, &h_u, xi, t, search)?
        };
        if m > search.probe_floor {
            return Ok(ProbeData {
                h_rho: ScalarField::zeros(g),
                h_u,
                x_star,
                x_star_index: xi,
                translation: a,
                m_value: m,
                base_rho: base_rho.clone(),
                base_u: base_u.clone(),
            });
        }
    }
    Err(Error::ProbeSearch {
        floor: search.probe_floor,
        tried,
    })
}
