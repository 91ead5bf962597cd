//! Divergence-free compactly supported bumps `w = curl(χ e₃)`.

use crate::dynamics::flowmap::max_jacobian_norm;
use crate::dynamics::FlowMapState;
use crate::error::{Error, Result};
use crate::spectral::{calculus, sobolev_norm, GridSpec, ScalarField, SobolevIndex, VectorField};

/// Profile values below this are set to zero.
pub const PROFILE_FLOOR: f64 = 1e-16;
/// Safety factor applied to the measured Lipschitz constant.
pub const LIPSCHITZ_SAFETY: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpSpec {
    pub center: [f64; 3],
    pub radius: f64,
    /// `‖w‖_s` after normalization.
    pub target_norm: f64,
    pub s: SobolevIndex,
}

impl BumpSpec {
    /// `0 < r < L/4`, so the ball does not meet its periodic images.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let l = grid.length();
        if !(self.radius > 0.0 && self.radius < l / 4.0) {
            return Err(Error::InvalidParameter(format!(
                "bump radius {} must lie in (0, L/4 = {})",
                self.radius,
                l / 4.0
            )));
        }
        if !(self.target_norm > 0.0 && self.target_norm.is_finite()) {
            return Err(Error::InvalidParameter(format!("bump norm {} must be positive", self.target_norm)));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter(format!("bump center {:?} must be finite", self.center)));
        }
        Ok(())
    }
}

/// `exp(−1/(1 − ρ²))` for `ρ < 1`, zero outside and below [`PROFILE_FLOOR`].
pub fn bump_profile(rho: f64) -> f64 {
    if rho >= 1.0 {
        return 0.0;
    }
    let v = (-1.0 / (1.0 - rho * rho)).exp();
    if v < PROFILE_FLOOR {
        0.0
    } else {
        v
    }
}

/// The sampled scalar bump `χ(|x − center| / r)`, distances on the torus.
pub fn bump_scalar(grid: &GridSpec, center: [f64; 3], radius: f64) -> ScalarField {
    ScalarField::from_fn(*grid, |x| bump_profile(grid.torus_distance(x, center) / radius))
}

/// `curl(χ e₃)` taken spectrally and scaled to `‖w‖_s = target_norm`.
pub fn make_bump(grid: &GridSpec, spec: &BumpSpec) -> Result<VectorField> {
    spec.validate(grid)?;
    let chi = bump_scalar(grid, spec.center, spec.radius);
    let g = calculus::gradient(&chi);
    let [gx, gy, _] = g.into_comps();
    let w = VectorField::new([gy, gx.scale(-1.0), ScalarField::zeros(*grid)])?;
    let norm = sobolev_norm(&w, spec.s.value())?;
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bump of radius {} is not resolved on n = {}",
            spec.radius,
            grid.n()
        )));
    }
    Ok(w.scale(spec.target_norm / norm))
}

/// `curl(χ e₃)` with `∇χ` evaluated in closed form at the nodes, scaled so
/// `max |w| = amplitude`. Exactly zero outside `B_r(center)`; not
/// divergence-free as a grid field.
pub fn nodal_swirl(grid: &GridSpec, center: [f64; 3], radius: f64, amplitude: f64) -> VectorField {
    let raw = VectorField::from_fn(*grid, |x| {
        let d = grid.min_image(x, center);
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() / radius;
        let chi = bump_profile(r);
        if chi == 0.0 || r == 0.0 {
            return [0.0; 3];
        }
        // dχ/dr · ∂r/∂x_a
        let q = 1.0 - r * r;
        let dchi = chi * (-2.0 * r / (q * q));
        let g = d.map(|v| dchi * v / (r * radius * radius));
        [g[1], -g[0], 0.0]
    });
    let peak = raw.max_norm();
    if peak > 0.0 {
        raw.scale(amplitude / peak)
    } else {
        raw
    }
}

/// Largest `|w|` at nodes farther than `radius` from `center`.
pub fn support_leak(w: &VectorField, center: [f64; 3], radius: f64) -> f64 {
    let g = *w.grid();
    (0..g.len())
        .filter(|&i| g.torus_distance(g.node(i), center) > radius)
        .map(|i| {
            let v = w.at(i);
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        })
        .fold(0.0, f64::max)
}

/// `1.5 · max ‖dφ‖` over the ensemble.
pub fn estimate_lipschitz(ensemble: &[&FlowMapState]) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::InvalidParameter("Lipschitz estimate needs at least one flow map".into()));
    }
    Ok(LIPSCHITZ_SAFETY * ensemble.iter().map(|s| max_jacobian_norm(&s.w)).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(center: [f64; 3], radius: f64) -> BumpSpec {
        BumpSpec {
            center,
            radius,
            target_norm: 0.25,
            s: SobolevIndex::default(),
        }
    }

    #[test]
    fn divergence_free_and_normalized() {
        let g = GridSpec::periodic(32).unwrap();
        let w = make_bump(&g, &spec([3.0, 3.0, 3.0], 1.2)).unwrap();
        assert!(calculus::divergence(&w).max_abs() <= 1e-12);
        let n = sobolev_norm(&w, 3.0).unwrap();
        assert!((n - 0.25).abs() <= 1e-12 * 0.25);
    }

    #[test]
    fn translation_covariant_on_grid_shifts() {
        let g = GridSpec::periodic(16).unwrap();
        let h = g.spacing();
        let a = make_bump(&g, &spec([2.0, 3.0, 1.0], 1.0)).unwrap();
        let b = make_bump(&g, &spec([2.0 + 3.0 * h, 3.0, 1.0 - h], 1.0)).unwrap();
        let n = g.n();
        for idx in 0..g.len() {
            let (i, j, k) = g.unindex(idx);
            let src = g.index((i + n - 3) % n, j, (k + 1) % n);
            for c in 0..3 {
                assert!((b[c].values()[idx] - a[c].values()[src]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_degenerate_specs() {
        let g = GridSpec::periodic(16).unwrap();
        assert!(make_bump(&g, &spec([1.0; 3], 0.0)).is_err());
        assert!(make_bump(&g, &spec([1.0; 3], 2.0)).is_err());
        assert!(make_bump(&g, &spec([f64::NAN, 1.0, 1.0], 1.0)).is_err());
    }

    #[test]
    fn nodal_swirl_is_confined_and_matches_central_differences() {
        let g = GridSpec::periodic(32).unwrap();
        let c = [2.0, 3.0, 3.5];
        let w = nodal_swirl(&g, c, 1.4, 0.1);
        assert_eq!(support_leak(&w, c, 1.4), 0.0);
        assert!((w.max_norm() - 0.1).abs() < 1e-15);
        let chi = |x: [f64; 3]| bump_profile(g.torus_distance(x, c) / 1.4);
        let e = 1e-6;
        let fd: Vec<[f64; 3]> = (0..g.len())
            .map(|idx| {
                let x = g.node(idx);
                let d = |a: usize| {
                    let (mut p, mut m) = (x, x);
                    p[a] += e;
                    m[a] -= e;
                    (chi(p) - chi(m)) / (2.0 * e)
                };
                [d(1), -d(0), 0.0]
            })
            .collect();
        let peak = fd.iter().map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt()).fold(0.0, f64::max);
        let exact = nodal_swirl(&g, c, 1.4, peak);
        for (idx, v) in fd.iter().enumerate() {
            let u = exact.at(idx);
            assert!((0..3).all(|a| (u[a] - v[a]).abs() < 1e-8));
        }
    }

    #[test]
    fn lipschitz_of_rigid_flows() {
        let g = GridSpec::periodic(8).unwrap();
        let id = FlowMapState::identity(g);
        assert_eq!(estimate_lipschitz(&[&id]).unwrap(), 1.5);
        let tr = FlowMapState::new(VectorField::constant(g, [0.3, 0.0, -1.0]), VectorField::zeros(g), 1.0).unwrap();
        assert!((estimate_lipschitz(&[&id, &tr]).unwrap() - 1.5).abs() < 1e-12);
        assert!(estimate_lipschitz(&[]).is_err());
    }
}
