use std::str::FromStr;

use num_complex::Complex64;

use super::field::ScalarField;
use super::grid::GridSpec;
use super::nufft::NufftPlan;
use crate::error::{Error, Result};

/// Off-grid interpolation method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Exact evaluation of the trigonometric interpolant.
    #[default]
    Trig,
    /// Local 4-point Lagrange interpolation per axis.
    Tricubic,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trig" => Ok(Method::Trig),
            "tricubic" => Ok(Method::Tricubic),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Trig => "trig",
            Method::Tricubic => "tricubic",
        }
    }
}

/// Below this many points the direct sum beats the NUFFT setup.
const DIRECT_LIMIT: usize = 48;

/// Direct trigonometric sum at one point.
///
/// Nyquist modes enter as `cos(n x / 2)`, the symmetric real interpolant.
pub fn trig_eval_direct(grid: &GridSpec, coeffs: &[Complex64], p: [f64; 3]) -> f64 {
    let n = grid.n();
    let kv = grid.axis_wavevectors();
    let phase = |x: f64| -> Vec<Complex64> {
        kv.iter()
            .enumerate()
            .map(|(i, &k)| {
                if grid.is_nyquist(i) {
                    Complex64::new((k * x).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, k * x)
                }
            })
            .collect()
    };
    let ex = phase(p[0]);
    let ey = phase(p[1]);
    let ez = phase(p[2]);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let mut acc_y = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let row = &coeffs[n * (j + n * k)..][..n];
            let mut acc_x = Complex64::new(0.0, 0.0);
            for (c, e) in row.iter().zip(&ex) {
                acc_x += c * e;
            }
            acc_y += acc_x * ey[j];
        }
        acc += acc_y * ez[k];
    }
    acc.re
}

fn lagrange4(t: f64) -> [f64; 4] {
    // nodes at -1, 0, 1, 2
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

fn tricubic_eval(fields: &[&ScalarField], p: [f64; 3], out: &mut [f64]) {
    let g = *fields[0].grid();
    let n = g.n();
    let h = g.spacing();
    let mut base = [0usize; 3];
    let mut w = [[0.0; 4]; 3];
    for d in 0..3 {
        let s = (p[d] / h).rem_euclid(n as f64);
        let i0 = s.floor();
        w[d] = lagrange4(s - i0);
        base[d] = i0 as usize % n;
    }
    let wrap = |b: usize, a: usize| (b + n + a - 1) % n;
    for (o, f) in out.iter_mut().zip(fields) {
        let v = f.values();
        let mut acc = 0.0;
        for c in 0..4 {
            let kz = wrap(base[2], c);
            for b in 0..4 {
                let jy = wrap(base[1], b);
                let wyz = w[1][b] * w[2][c];
                for a in 0..4 {
                    acc += w[0][a] * wyz * v[g.index(wrap(base[0], a), jy, kz)];
                }
            }
        }
        *o = acc;
    }
}

/// Evaluate several fields on one grid at the same points.
pub fn evaluate_offgrid_many(
    fields: &[&ScalarField],
    points: &[[f64; 3]],
    method: Method,
) -> Result<Vec<Vec<f64>>> {
    if fields.is_empty() {
        return Ok(Vec::new());
    }
    let g = *fields[0].grid();
    for f in fields {
        f.grid().check_same(&g, "off-grid evaluation")?;
    }
    if let Some(index) = points.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(Error::NonFinite {
            what: "evaluation point".into(),
            index,
        });
    }
    let mut out = vec![vec![0.0; points.len()]; fields.len()];
    match method {
        Method::Tricubic => {
            let mut buf = vec![0.0; fields.len()];
            for (p, pt) in points.iter().enumerate() {
                tricubic_eval(fields, *pt, &mut buf);
                for (o, v) in out.iter_mut().zip(&buf) {
                    o[p] = *v;
                }
            }
        }
        Method::Trig if points.len() <= DIRECT_LIMIT => {
            for (o, f) in out.iter_mut().zip(fields) {
                let c = f.coeffs();
                for (p, pt) in points.iter().enumerate() {
                    o[p] = trig_eval_direct(&g, c, *pt);
                }
            }
        }
        Method::Trig => {
            let specs: Vec<&[Complex64]> = fields.iter().map(|f| f.coeffs()).collect();
            out = NufftPlan::new(g).eval_many(&specs, points);
        }
    }
    Ok(out)
}

pub fn evaluate_offgrid(f: &ScalarField, points: &[[f64; 3]], method: Method) -> Result<Vec<f64>> {
    Ok(evaluate_offgrid_many(&[f], points, method)?.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn smooth(g: GridSpec) -> ScalarField {
        ScalarField::from_fn(g, |x| {
            (x[0] + 0.3).sin() * (2.0 * x[1]).cos() + 0.2 * (x[2] - x[0]).cos() + 0.1 * (3.0 * x[2]).sin()
        })
    }

    fn scattered(g: &GridSpec, count: usize) -> Vec<[f64; 3]> {
        let l = g.length();
        (0..count)
            .map(|i| {
                let t = i as f64;
                [
                    (0.37 * t + 0.11).fract() * l,
                    (0.61 * t + 0.23).fract() * l,
                    (0.83 * t + 0.05).fract() * l,
                ]
            })
            .collect()
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("trig".parse::<Method>().unwrap(), Method::Trig);
        assert_eq!("tricubic".parse::<Method>().unwrap(), Method::Tricubic);
        assert!(matches!("spline".parse::<Method>(), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn cosine_closed_form() {
        let g = GridSpec::periodic(16).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].cos());
        let v = evaluate_offgrid(&f, &[[PI / 3.0, 0.0, 0.0]], Method::Trig).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn nodes_reproduce_values() {
        let g = GridSpec::periodic(8).unwrap();
        let f = smooth(g);
        let nodes = g.nodes();
        let v = evaluate_offgrid(&f, &nodes, Method::Trig).unwrap();
        for (a, b) in v.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let v = evaluate_offgrid(&f, &nodes, Method::Tricubic).unwrap();
        for (a, b) in v.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn nufft_matches_direct_sum() {
        for n in [8, 12, 16] {
            let g = GridSpec::new(n, 2.5).unwrap();
            // a field with energy in the Nyquist planes
            let f = ScalarField::from_fn(g, |x| {
                let k = 2.0 * PI / 2.5;
                (k * x[0]).sin() + ((n / 2) as f64 * k * x[1]).cos() * (k * x[2]).cos() + 0.3
            });
            let e = ScalarField::from_fn(g, |x| (x[0] * x[1]).sin());
            let pts = scattered(&g, 200);
            let fast = NufftPlan::new(g).eval_many(&[f.coeffs(), e.coeffs(), f.coeffs()], &pts);
            for (p, pt) in pts.iter().enumerate() {
                let df = trig_eval_direct(&g, f.coeffs(), *pt);
                let de = trig_eval_direct(&g, e.coeffs(), *pt);
                assert!((fast[0][p] - df).abs() < 1e-12, "n={n} f: {} vs {df}", fast[0][p]);
                assert!((fast[1][p] - de).abs() < 1e-12, "n={n} e");
                assert!((fast[2][p] - df).abs() < 1e-12, "n={n} f again");
            }
        }
    }

    #[test]
    fn tricubic_converges_at_fourth_order() {
        let l = 2.0 * PI;
        let exact = |x: [f64; 3]| (x[0] + 0.3).sin() * (2.0 * x[1]).cos() + 0.2 * (x[2] - x[0]).cos();
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let g = GridSpec::new(n, l).unwrap();
            let f = ScalarField::from_fn(g, exact);
            let pts = scattered(&g, 40);
            let v = evaluate_offgrid(&f, &pts, Method::Tricubic).unwrap();
            let e = pts
                .iter()
                .zip(&v)
                .map(|(p, v)| (v - exact(*p)).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.5, "order {order} from {errs:?}");
        }
    }
}
