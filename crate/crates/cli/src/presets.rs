//! Named initial data.

use crate::config::{Preset, RunConfig};
use crate::snapshot::{read_scalar, read_vector};
use anyhow::Result;
use epflow_core::elliptic::DensityState;
use epflow_core::experiments::bump::{bump_profile, nodal_swirl};
use epflow_core::{GridSpec, ScalarField, VectorField};

/// Length unit of a box: `L / 2π`.
pub fn unit(grid: &GridSpec) -> f64 {
    grid.length() / (2.0 * std::f64::consts::PI)
}

/// Trigonometric data at wavenumber `k` (in units of the base wavenumber).
pub fn smooth_data(grid: &GridSpec, amplitude: f64, k: f64) -> (ScalarField, VectorField) {
    let a = amplitude;
    let q = k / unit(grid);
    let rho = ScalarField::from_fn(*grid, |x| a * (0.6 * (q * x[0]).cos() + 0.4 * (q * (x[1] + x[2])).sin()));
    let u = VectorField::from_fn(*grid, |x| {
        [a * (q * x[1]).sin(), a * 0.5 * (q * (x[2] + x[0])).cos(), a * 0.7 * (q * x[0]).sin()]
    });
    (rho, u)
}

/// Compactly supported base: a swirl of radius `L/2π` near the origin
/// corner, with density `1 + a·χ` on the same ball.
pub fn compact_base(grid: &GridSpec, amplitude: f64) -> (ScalarField, VectorField) {
    let s = unit(grid);
    let c = [1.2 * s; 3];
    let u = nodal_swirl(grid, c, s, amplitude);
    let rho = ScalarField::from_fn(*grid, |x| amplitude * bump_profile(grid.torus_distance(x, c) / s));
    (rho, u)
}

/// `(ρ̄0, u0)` for the configured preset.
pub fn initial_data(config: &RunConfig) -> Result<(DensityState, VectorField)> {
    let g = config.grid();
    let (rho, u) = match config.preset {
        Preset::Equilibrium => (ScalarField::zeros(g), VectorField::zeros(g)),
        Preset::Translation => (ScalarField::zeros(g), VectorField::constant(g, config.velocity)),
        Preset::Smooth => smooth_data(&g, config.amplitude, 1.0),
        Preset::BumpPair => compact_base(&g, config.amplitude),
        Preset::File => (
            read_scalar(config.rho_file.as_ref().expect("validated"), &g)?,
            read_vector(config.u_file.as_ref().expect("validated"), &g)?,
        ),
    };
    Ok((DensityState::new(rho)?, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{write_field, Field, Snapshot};

    #[test]
    fn presets_build() {
        let mut c = RunConfig::default();
        c.n = 16;
        for p in [Preset::Equilibrium, Preset::Translation, Preset::Smooth, Preset::BumpPair] {
            c.preset = p;
            let (rho, u) = initial_data(&c).unwrap();
            assert_eq!(rho.grid().n(), 16);
            assert_eq!(u.grid().n(), 16);
        }
        c.preset = Preset::Translation;
        assert_eq!(initial_data(&c).unwrap().1.at(7), c.velocity);
    }

    #[test]
    fn compact_base_leaves_room_for_a_probe() {
        let g = GridSpec::periodic(48).unwrap();
        let (rho, u) = compact_base(&g, 0.1);
        assert!((u.max_norm() - 0.1).abs() < 1e-15);
        let far = g.index(24, 24, 24);
        assert_eq!(u.at(far), [0.0; 3]);
        assert_eq!(rho.values()[far], 0.0);
    }

    #[test]
    fn file_preset_reads_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::periodic(8).unwrap();
        let (rho, u) = smooth_data(&g, 0.1, 1.0);
        let (rp, up) = (dir.path().join("rho.eplf"), dir.path().join("u.eplf"));
        write_field(&rp, &Snapshot { field: Field::Scalar(rho.clone()), time: 0.0 }).unwrap();
        write_field(&up, &Snapshot { field: Field::Vector(u.clone()), time: 0.0 }).unwrap();
        let mut c = RunConfig::default();
        c.n = 8;
        c.preset = Preset::File;
        c.rho_file = Some(rp);
        c.u_file = Some(up);
        c.validate().unwrap();
        let (r2, u2) = initial_data(&c).unwrap();
        assert_eq!(r2.rho_bar().values(), rho.values());
        assert_eq!(u2, u);
    }
}
