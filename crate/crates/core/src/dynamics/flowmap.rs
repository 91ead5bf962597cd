//! Flow-map geometry: Jacobians, inversion, composition.

use crate::elliptic::DensityState;
use crate::error::{Error, Result};
use crate::spectral::{calculus, evaluate_offgrid_many, GridSpec, Method, ScalarField, VectorField};

use super::state::FlowMapState;

/// Nodal 3×3 matrix field stored as nine component arrays.
#[derive(Clone, Debug)]
pub struct MatrixField {
    pub m: [[Vec<f64>; 3]; 3],
}

impl MatrixField {
    #[inline]
    pub fn at(&self, idx: usize) -> [[f64; 3]; 3] {
        std::array::from_fn(|a| std::array::from_fn(|b| self.m[a][b][idx]))
    }

    pub fn len(&self) -> usize {
        self.m[0][0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `dW` as a matrix field, `[a][b] = ∂_b W_a`.
pub fn displacement_gradient(w: &VectorField) -> MatrixField {
    let j = calculus::jacobian(w);
    let [r0, r1, r2] = j;
    let row = |r: [ScalarField; 3]| {
        let [a, b, c] = r;
        [a.into_values(), b.into_values(), c.into_values()]
    };
    MatrixField {
        m: [row(r0), row(r1), row(r2)],
    }
}

#[inline]
pub(crate) fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// `det(I + A) − 1` through the invariants of `A`, avoiding cancellation.
#[inline]
pub(crate) fn det_identity_plus_minus_one(a: &[[f64; 3]; 3]) -> f64 {
    let tr = a[0][0] + a[1][1] + a[2][2];
    let mut tr2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            tr2 += a[i][j] * a[j][i];
        }
    }
    tr + 0.5 * (tr * tr - tr2) + det3(a)
}

/// Cofactor matrix `C` of `F`, so that `F⁻¹ = Cᵀ / det F`.
#[inline]
pub(crate) fn cofactor(f: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    [
        [
            f[1][1] * f[2][2] - f[1][2] * f[2][1],
            f[1][2] * f[2][0] - f[1][0] * f[2][2],
            f[1][0] * f[2][1] - f[1][1] * f[2][0],
        ],
        [
            f[0][2] * f[2][1] - f[0][1] * f[2][2],
            f[0][0] * f[2][2] - f[0][2] * f[2][0],
            f[0][1] * f[2][0] - f[0][0] * f[2][1],
        ],
        [
            f[0][1] * f[1][2] - f[0][2] * f[1][1],
            f[0][2] * f[1][0] - f[0][0] * f[1][2],
            f[0][0] * f[1][1] - f[0][1] * f[1][0],
        ],
    ]
}

#[inline]
pub(crate) fn identity_plus(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut f = *a;
    for (i, row) in f.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    f
}

/// `det(I + dW) − 1` nodewise.
pub fn det_minus_one(w: &VectorField) -> ScalarField {
    let dw = displacement_gradient(w);
    let vals = (0..dw.len()).map(|i| det_identity_plus_minus_one(&dw.at(i))).collect();
    ScalarField::new(*w.grid(), vals).unwrap_or_else(|_| ScalarField::constant(*w.grid(), f64::NAN))
}

/// `det(dφ)` for `φ = id + W`.
pub fn jacobian_det(state: &FlowMapState) -> ScalarField {
    det_minus_one(&state.w).map(|v| 1.0 + v)
}

/// Positions `x + W(x)` of the grid nodes.
pub fn displaced_nodes(w: &VectorField) -> Vec<[f64; 3]> {
    let g = w.grid();
    (0..g.len())
        .map(|i| {
            let x = g.node(i);
            let d = w.at(i);
            g.fold([x[0] + d[0], x[1] + d[1], x[2] + d[2]])
        })
        .collect()
}

/// Default tolerance for `‖φ(ψ(x)) − x‖_∞`.
pub const INVERSION_TOL: f64 = 1e-10;
const MAX_INVERSION_ITER: usize = 200;

fn max_frobenius(dw: &MatrixField) -> f64 {
    (0..dw.len())
        .map(|i| {
            let a = dw.at(i);
            a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

fn solve3(a: &[[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(a);
    if d.abs() < 1e-14 {
        return None;
    }
    let c = cofactor(a);
    Some(std::array::from_fn(|i| (c[0][i] * b[0] + c[1][i] * b[1] + c[2][i] * b[2]) / d))
}

/// Inverse displacement `Y` with `φ(x + Y(x)) = x` at every node.
///
/// Fixed-point iteration `Y ← −W(x + Y)` when `‖dW‖_∞ < 0.9`, otherwise
/// pointwise Newton on the spectral interpolant.
pub fn invert_flow_map(w: &VectorField, tol: f64) -> Result<VectorField> {
    let g = *w.grid();
    let dw = displacement_gradient(w);
    let contraction = max_frobenius(&dw);
    let comps = w.comps();
    let wrefs: Vec<&ScalarField> = comps.iter().collect();
    let jac_fields: Vec<ScalarField> = dw
        .m
        .iter()
        .flatten()
        .map(|v| ScalarField::new(g, v.clone()))
        .collect::<Result<_>>()?;
    let nodes = g.nodes();
    let mut y: Vec<[f64; 3]> = (0..g.len()).map(|i| w.at(i).map(|v| -v)).collect();
    let mut use_newton = contraction >= 0.9;
    let mut last = f64::INFINITY;
    let mut worst = (0usize, f64::INFINITY);
    for _ in 0..MAX_INVERSION_ITER {
        let pts: Vec<[f64; 3]> = (0..g.len())
            .map(|i| g.fold([nodes[i][0] + y[i][0], nodes[i][1] + y[i][1], nodes[i][2] + y[i][2]]))
            .collect();
        let wv = evaluate_offgrid_many(&wrefs, &pts, Method::Trig)?;
        let mut res_max = 0.0;
        let mut res_node = 0;
        let res: Vec<[f64; 3]> = (0..g.len())
            .map(|i| {
                let r = [y[i][0] + wv[0][i], y[i][1] + wv[1][i], y[i][2] + wv[2][i]];
                let m = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if m > res_max {
                    res_max = m;
                    res_node = i;
                }
                r
            })
            .collect();
        worst = (res_node, res_max);
        if res_max <= tol {
            return Ok(VectorField::from_comps(std::array::from_fn(|a| {
                ScalarField::from_parts(g, y.iter().map(|v| v[a]).collect())
            })));
        }
        if !use_newton && res_max > 0.9 * last {
            use_newton = true;
        }
        last = res_max;
        if use_newton {
            let jrefs: Vec<&ScalarField> = jac_fields.iter().collect();
            let jv = evaluate_offgrid_many(&jrefs, &pts, Method::Trig)?;
            for i in 0..g.len() {
                let a: [[f64; 3]; 3] = std::array::from_fn(|r| std::array::from_fn(|c| jv[3 * r + c][i]));
                let step = solve3(&identity_plus(&a), res[i]).ok_or(Error::InversionFailed {
                    node: i,
                    residual: res_max,
                })?;
                for d in 0..3 {
                    y[i][d] -= step[d];
                }
            }
        } else {
            for i in 0..g.len() {
                for d in 0..3 {
                    y[i][d] = -wv[d][i];
                }
            }
        }
    }
    Err(Error::InversionFailed {
        node: worst.0,
        residual: worst.1,
    })
}

/// Points `x + Y(x)` for an inverse displacement `Y`.
fn inverse_points(y: &VectorField) -> Vec<[f64; 3]> {
    displaced_nodes(y)
}

fn evaluate_fields(fields: &[&ScalarField], pts: &[[f64; 3]], method: Method) -> Result<Vec<ScalarField>> {
    let g = *fields[0].grid();
    evaluate_offgrid_many(fields, pts, method)?
        .into_iter()
        .map(|v| ScalarField::new(g, v))
        .collect()
}

/// `f ∘ φ`.
pub fn pullback(f: &ScalarField, w: &VectorField, method: Method) -> Result<ScalarField> {
    Ok(evaluate_fields(&[f], &displaced_nodes(w), method)?.remove(0))
}

/// `u ∘ φ` componentwise.
pub fn pullback_vector(u: &VectorField, w: &VectorField, method: Method) -> Result<VectorField> {
    let c = u.comps();
    let mut out = evaluate_fields(&[&c[0], &c[1], &c[2]], &displaced_nodes(w), method)?.into_iter();
    Ok(VectorField::from_comps([out.next().unwrap(), out.next().unwrap(), out.next().unwrap()]))
}

/// `f ∘ φ⁻¹` given the inverse displacement.
pub fn pushforward_with_inverse(f: &ScalarField, y: &VectorField, method: Method) -> Result<ScalarField> {
    Ok(evaluate_fields(&[f], &inverse_points(y), method)?.remove(0))
}

pub fn pushforward_vector_with_inverse(u: &VectorField, y: &VectorField, method: Method) -> Result<VectorField> {
    let c = u.comps();
    let mut out = evaluate_fields(&[&c[0], &c[1], &c[2]], &inverse_points(y), method)?.into_iter();
    Ok(VectorField::from_comps([out.next().unwrap(), out.next().unwrap(), out.next().unwrap()]))
}

/// `f ∘ φ⁻¹`.
pub fn pushforward(f: &ScalarField, w: &VectorField, method: Method) -> Result<ScalarField> {
    let y = invert_flow_map(w, INVERSION_TOL)?;
    pushforward_with_inverse(f, &y, method)
}

pub fn pushforward_vector(u: &VectorField, w: &VectorField, method: Method) -> Result<VectorField> {
    let y = invert_flow_map(w, INVERSION_TOL)?;
    pushforward_vector_with_inverse(u, &y, method)
}

fn rho_bar_over_det(rho0: &DensityState, w: &VectorField) -> Result<ScalarField> {
    let jm1 = det_minus_one(w);
    let min = 1.0 + jm1.min();
    if !(min > 0.0) {
        return Err(Error::JacobianDegenerate { t: f64::NAN, min_det: min });
    }
    // (1 + ρ̄0)/J − 1 = (ρ̄0 − (J − 1))/J
    Ok(rho0.rho_bar().zip_map(&jm1, |r, d| (r - d) / (1.0 + d)))
}

/// `ρ = (ρ0 / det dφ) ∘ φ⁻¹` given the inverse displacement.
pub fn density_from_flow_with_inverse(rho0: &DensityState, w: &VectorField, y: &VectorField) -> Result<DensityState> {
    let q = rho_bar_over_det(rho0, w)?;
    DensityState::new(pushforward_with_inverse(&q, y, Method::Trig)?)
}

/// `ρ = (ρ0 / det dφ) ∘ φ⁻¹`.
pub fn density_from_flow(rho0: &DensityState, w: &VectorField) -> Result<DensityState> {
    let y = invert_flow_map(w, INVERSION_TOL)?;
    density_from_flow_with_inverse(rho0, w, &y)
}

/// `(det dφ)⁻¹ [dφ] ω0` in label coordinates.
pub fn transported_vorticity_labels(omega0: &VectorField, w: &VectorField) -> VectorField {
    let g = *w.grid();
    let dw = displacement_gradient(w);
    let mut out = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    for i in 0..g.len() {
        let a = dw.at(i);
        let j = 1.0 + det_identity_plus_minus_one(&a);
        let f = identity_plus(&a);
        let o = omega0.at(i);
        for r in 0..3 {
            out[r][i] = (f[r][0] * o[0] + f[r][1] * o[1] + f[r][2] * o[2]) / j;
        }
    }
    let [a, b, c] = out;
    VectorField::from_comps([
        ScalarField::from_parts(g, a),
        ScalarField::from_parts(g, b),
        ScalarField::from_parts(g, c),
    ])
}

/// `ω = ((det dφ)⁻¹ [dφ] ω0) ∘ φ⁻¹` given the inverse displacement.
pub fn vorticity_transport_with_inverse(omega0: &VectorField, w: &VectorField, y: &VectorField) -> Result<VectorField> {
    pushforward_vector_with_inverse(&transported_vorticity_labels(omega0, w), y, Method::Trig)
}

/// `ω = ((det dφ)⁻¹ [dφ] ω0) ∘ φ⁻¹`.
pub fn vorticity_transport(omega0: &VectorField, w: &VectorField) -> Result<VectorField> {
    let y = invert_flow_map(w, INVERSION_TOL)?;
    vorticity_transport_with_inverse(omega0, w, &y)
}

/// Largest operator 2-norm of `dφ` over the nodes.
pub fn max_jacobian_norm(w: &VectorField) -> f64 {
    let dw = displacement_gradient(w);
    (0..dw.len())
        .map(|i| spectral_norm3(&identity_plus(&dw.at(i))))
        .fold(0.0, f64::max)
}

/// Largest singular value of a 3×3 matrix via power iteration on `AᵀA`.
pub(crate) fn spectral_norm3(a: &[[f64; 3]; 3]) -> f64 {
    let mut ata = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ata[i][j] = (0..3).map(|k| a[k][i] * a[k][j]).sum();
        }
    }
    let mut x = [1.0, 0.7, 0.3];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let y: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| ata[i][j] * x[j]).sum());
        let nrm = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        if nrm == 0.0 {
            return 0.0;
        }
        let next = nrm;
        x = y.map(|v| v / nrm);
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// Grid used by a displacement field.
pub fn grid_of(w: &VectorField) -> GridSpec {
    *w.grid()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> GridSpec {
        GridSpec::periodic(n).unwrap()
    }

    #[test]
    fn determinant_examples() {
        let grid = g(16);
        let id = FlowMapState::identity(grid);
        assert!(jacobian_det(&id).sub(&ScalarField::constant(grid, 1.0)).max_abs() == 0.0);
        let shear = VectorField::from_fn(grid, |x| [0.3 * x[1].sin(), 0.0, 0.0]);
        assert!(det_minus_one(&shear).max_abs() < 1e-15);
        let stretch = VectorField::from_fn(grid, |x| [0.1 * x[0].sin(), 0.0, 0.0]);
        let expect = ScalarField::from_fn(grid, |x| 0.1 * x[0].cos());
        assert!(det_minus_one(&stretch).sub(&expect).max_abs() < 1e-14);
    }

    #[test]
    fn cofactor_inverts() {
        let f = [[1.1, 0.2, -0.1], [0.05, 0.9, 0.3], [-0.2, 0.1, 1.2]];
        let c = cofactor(&f);
        let d = det3(&f);
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..3).map(|k| f[i][k] * c[j][k] / d).sum();
                assert!((p - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn shear_inverse_closed_form() {
        let grid = g(16);
        let w = VectorField::from_fn(grid, |x| [0.4 * x[1].sin(), 0.0, 0.0]);
        let y = invert_flow_map(&w, 1e-12).unwrap();
        let expect = w.scale(-1.0);
        assert!(y.sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn identity_and_translation_compositions() {
        let grid = g(16);
        let f = ScalarField::from_fn(grid, |x| (x[0] + 0.2).sin() * x[2].cos() + 0.1 * (2.0 * x[1]).sin());
        let zero = VectorField::zeros(grid);
        assert!(pullback(&f, &zero, Method::Trig).unwrap().sub(&f).max_abs() < 1e-12);
        let c = [0.3, -0.7, 1.1];
        let t = VectorField::constant(grid, c);
        let shifted = ScalarField::from_fn(grid, |x| {
            (x[0] + c[0] + 0.2).sin() * (x[2] + c[2]).cos() + 0.1 * (2.0 * (x[1] + c[1])).sin()
        });
        assert!(pullback(&f, &t, Method::Trig).unwrap().sub(&shifted).max_abs() < 1e-12);
        let back = ScalarField::from_fn(grid, |x| {
            (x[0] - c[0] + 0.2).sin() * (x[2] - c[2]).cos() + 0.1 * (2.0 * (x[1] - c[1])).sin()
        });
        assert!(pushforward(&f, &t, Method::Trig).unwrap().sub(&back).max_abs() < 1e-12);
    }

    #[test]
    fn push_undoes_pull() {
        let grid = g(16);
        let f = ScalarField::from_fn(grid, |x| x[0].sin() * (x[1] - x[2]).cos());
        let w = VectorField::from_fn(grid, |x| {
            [0.05 * x[1].sin(), 0.04 * (x[2] + x[0]).cos(), 0.03 * x[0].sin()]
        });
        let pulled = pullback(&f, &w, Method::Trig).unwrap();
        let back = pushforward(&pulled, &w, Method::Trig).unwrap();
        assert!(back.sub(&f).max_abs() < 1e-8, "{}", back.sub(&f).max_abs());
    }

    #[test]
    fn density_and_vorticity_under_rigid_motions() {
        let grid = g(16);
        let rho0 = DensityState::new(ScalarField::from_fn(grid, |x| 0.2 * x[0].cos())).unwrap();
        let zero = VectorField::zeros(grid);
        let same = density_from_flow(&rho0, &zero).unwrap();
        assert!(same.rho_bar().sub(rho0.rho_bar()).max_abs() < 1e-12);
        let c = [0.5, 0.0, 0.0];
        let moved = density_from_flow(&rho0, &VectorField::constant(grid, c)).unwrap();
        let expect = ScalarField::from_fn(grid, |x| 0.2 * (x[0] - 0.5).cos());
        assert!(moved.rho_bar().sub(&expect).max_abs() < 1e-12);
        let shear = VectorField::from_fn(grid, |x| [0.3 * x[1].sin(), 0.0, 0.0]);
        let flat = density_from_flow(&DensityState::uniform(grid), &shear).unwrap();
        assert!(flat.rho_bar().max_abs() < 1e-12);

        let omega0 = VectorField::from_fn(grid, |x| [x[1].sin(), 0.0, x[0].cos()]);
        let om = vorticity_transport(&omega0, &zero).unwrap();
        assert!(om.sub(&omega0).max_abs() < 1e-12);
        let om = vorticity_transport(&VectorField::zeros(grid), &shear).unwrap();
        assert_eq!(om.max_abs(), 0.0);
        let om = vorticity_transport(&omega0, &VectorField::constant(grid, c)).unwrap();
        let expect = VectorField::from_fn(grid, |x| [x[1].sin(), 0.0, (x[0] - 0.5).cos()]);
        assert!(om.sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn newton_branch_inverts_large_deformation() {
        let grid = g(16);
        let w = VectorField::from_fn(grid, |x| [0.8 * x[0].sin(), 0.3 * x[2].cos(), 0.2 * x[1].sin()]);
        let y = invert_flow_map(&w, 1e-10).unwrap();
        let pts = displaced_nodes(&y);
        let c = w.comps();
        let wv = evaluate_offgrid_many(&[&c[0], &c[1], &c[2]], &pts, Method::Trig).unwrap();
        for i in 0..grid.len() {
            for d in 0..3 {
                assert!((y[d].values()[i] + wv[d][i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobian_norm_of_rigid_motion_is_one() {
        let grid = g(8);
        assert!((max_jacobian_norm(&VectorField::constant(grid, [0.1, 0.2, 0.3])) - 1.0).abs() < 1e-14);
        let diag = [[2.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]];
        assert!((spectral_norm3(&diag) - 2.0).abs() < 1e-12);
    }
}
