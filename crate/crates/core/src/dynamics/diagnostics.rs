//! Mass, energy, norms and transport-identity residuals at output times.

use super::eulerian::{eulerian_energy, mass};
use super::flowmap::{
    displaced_nodes, invert_flow_map, transported_vorticity_labels, vorticity_transport, INVERSION_TOL,
};
use super::lagrangian::{label_energy, solve_label_potential, LabelGeometry};
use super::ops::SpectralOps;
use super::state::{DiagnosticsRecord, EulerianState, FlowMapState};
use crate::elliptic::{DensityState, EllipticParams};
use crate::error::Result;
use crate::spectral::{calculus, evaluate_offgrid_many, sobolev_norm, Method, ScalarField, SobolevIndex, VectorField};

fn relative_vorticity_residual(omega: &VectorField, transported: &VectorField, omega0: &VectorField, s: f64) -> Result<f64> {
    let num = sobolev_norm(&omega.sub(transported), s - 1.0)?;
    Ok(num / sobolev_norm(omega0, s - 1.0)?.max(1.0))
}

/// `‖J (ρ̄∘φ) + (J − 1) − ρ̄0‖_∞`, i.e. `‖det(dφ)(ρ∘φ) − ρ0‖_∞`.
fn density_residual(rho: &DensityState, w: &VectorField, jm1: &[f64], rho0: &DensityState) -> Result<f64> {
    let pulled = evaluate_offgrid_many(&[rho.rho_bar()], &displaced_nodes(w), Method::Trig)?.remove(0);
    let r0 = rho0.rho_bar().values();
    Ok((0..pulled.len())
        .map(|i| ((1.0 + jm1[i]) * pulled[i] + jm1[i] - r0[i]).abs())
        .fold(0.0, f64::max))
}

fn norms(rho_bar: &ScalarField, u: &VectorField, s: f64) -> Result<(f64, f64, f64)> {
    Ok((
        sobolev_norm(rho_bar, s - 1.0)?,
        sobolev_norm(u, s)?,
        sobolev_norm(&calculus::curl(u), s - 1.0)?,
    ))
}

/// Record for an Eulerian state; no flow map, so the residuals are absent.
pub fn eulerian_diagnostics(state: &EulerianState, params: &EllipticParams, s: SobolevIndex) -> Result<DiagnosticsRecord> {
    let rho = state.density()?;
    let (rn, un, on) = norms(&state.rho_bar, &state.u, s.value())?;
    Ok(DiagnosticsRecord {
        t: state.t,
        mass: mass(&rho),
        energy: eulerian_energy(state, params)?,
        density_transport_residual: None,
        vorticity_transport_residual: None,
        min_jacobian_det: None,
        rho_bar_norm: rn,
        u_norm: un,
        omega_norm: on,
    })
}

/// Eulerian fields `u = v∘φ⁻¹`, `ρ = (ρ0/det dφ)∘φ⁻¹` of a flow-map state.
pub fn reconstruct_eulerian(state: &FlowMapState, rho0: &DensityState) -> Result<EulerianState> {
    Ok(reconstruct(state, rho0, None)?.0)
}

/// Reconstruction sharing one inversion and one batched evaluation; also
/// returns the transported vorticity when `omega0` is given.
fn reconstruct(
    state: &FlowMapState,
    rho0: &DensityState,
    omega0: Option<&VectorField>,
) -> Result<(EulerianState, Option<VectorField>, LabelGeometry)> {
    let g = *state.grid();
    let y = invert_flow_map(&state.w, INVERSION_TOL)?;
    let geom = LabelGeometry::new(&state.w);
    let q = ScalarField::new(
        g,
        (0..g.len())
            .map(|i| (rho0.rho_bar().values()[i] - geom.jm1[i]) / geom.j[i])
            .collect(),
    )?;
    let tw = omega0.map(|o| transported_vorticity_labels(o, &state.w));
    let mut fields: Vec<&ScalarField> = vec![&state.v[0], &state.v[1], &state.v[2], &q];
    if let Some(t) = &tw {
        fields.extend(t.comps().iter());
    }
    let mut out = evaluate_offgrid_many(&fields, &displaced_nodes(&y), Method::Trig)?
        .into_iter()
        .map(|v| ScalarField::new(g, v));
    let mut next = || out.next().expect("field count");
    let u = VectorField::new([next()?, next()?, next()?])?;
    let rho_bar = next()?;
    let omega = match tw {
        Some(_) => Some(VectorField::new([next()?, next()?, next()?])?),
        None => None,
    };
    Ok((EulerianState::new(rho_bar, u, state.t)?, omega, geom))
}

/// Record for a flow-map state with its reconstructed Eulerian fields.
///
/// Mass is `∫ρ` of the reconstructed density; energy is evaluated in label
/// coordinates. The density residual compares the reconstructed density
/// pulled back by `φ`; the vorticity residual compares `curl u` against the
/// transport law. Both assume `φ(0) = id` and `ω0 = curl u0`.
pub fn lagrangian_diagnostics(
    state: &FlowMapState,
    rho0: &DensityState,
    omega0: &VectorField,
    params: &EllipticParams,
    s: SobolevIndex,
) -> Result<(DiagnosticsRecord, EulerianState)> {
    let (eul, transported, geom) = reconstruct(state, rho0, Some(omega0))?;
    let transported = transported.expect("requested");
    let ops = SpectralOps::new(state.grid());
    let phi = solve_label_potential(&ops, &geom, rho0, params, None)?;
    let energy = label_energy(&ops, &geom, state, rho0, &phi);
    let rho = eul.density()?;
    let dres = density_residual(&rho, &state.w, &geom.jm1, rho0)?;
    let omega = calculus::curl(&eul.u);
    let vres = relative_vorticity_residual(&omega, &transported, omega0, s.value())?;
    let (rn, un, on) = norms(&eul.rho_bar, &eul.u, s.value())?;
    let rec = DiagnosticsRecord {
        t: state.t,
        mass: mass(&rho),
        energy,
        density_transport_residual: Some(dres),
        vorticity_transport_residual: Some(vres),
        min_jacobian_det: Some(geom.min_det()),
        rho_bar_norm: rn,
        u_norm: un,
        omega_norm: on,
    };
    Ok((rec, eul))
}

/// Record pairing an Eulerian state with a flow map from the other integrator.
///
/// The transport identities are checked with the Eulerian `ρ` and `ω`
/// against the Lagrangian `φ`, so they test the two formulations against
/// each other.
pub fn paired_diagnostics(
    eul: &EulerianState,
    lag: &FlowMapState,
    rho0: &DensityState,
    omega0: &VectorField,
    params: &EllipticParams,
    s: SobolevIndex,
) -> Result<DiagnosticsRecord> {
    let mut rec = eulerian_diagnostics(eul, params, s)?;
    let geom = LabelGeometry::new(&lag.w);
    rec.density_transport_residual = Some(density_residual(&eul.density()?, &lag.w, &geom.jm1, rho0)?);
    let transported = vorticity_transport(omega0, &lag.w)?;
    let omega = calculus::curl(&eul.u);
    rec.vorticity_transport_residual = Some(relative_vorticity_residual(&omega, &transported, omega0, s.value())?);
    rec.min_jacobian_det = Some(geom.min_det());
    Ok(rec)
}
