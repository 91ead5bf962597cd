//! Chebyshev coefficient decay of particle trajectories `t ↦ φ(t, x₀)`.

use crate::dynamics::{rk4_step, FlowMapState, Formulation, LagrangianFlow};
use crate::elliptic::{DensityState, EllipticParams};
use crate::error::{Error, Result};
use crate::spectral::{evaluate_offgrid_many, Method, VectorField};

/// Coefficients at or below this are treated as zero.
pub const COEFF_FLOOR: f64 = 1e-12;
/// A trajectory whose coefficients hit the floor before this degree is
/// reported as trivially analytic.
pub const MIN_FIT_DEGREE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticityParams {
    pub t: f64,
    /// Polynomial degree `K`; `K + 1` Chebyshev samples.
    pub degree: usize,
    /// Largest substep.
    pub dt: f64,
    pub elliptic: EllipticParams,
}

impl Default for AnalyticityParams {
    fn default() -> Self {
        Self {
            t: 1.0,
            degree: 20,
            dt: 2.5e-3,
            elliptic: EllipticParams {
                newton_tol: 1e-14,
                ..EllipticParams::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticityReport {
    pub label: [f64; 3],
    pub times: Vec<f64>,
    /// `φ(t, x₀)` at `times`.
    pub samples: Vec<[f64; 3]>,
    /// `|c_k|`, Euclidean over the three components.
    pub coefficients: Vec<f64>,
    /// Fitted `log|c_k| ≈ a − rate·k` over `1 ..= fit_last`.
    pub decay_rate: f64,
    pub fit_last: usize,
    pub r_squared: f64,
    pub trivially_analytic: bool,
}

/// Chebyshev points of the first kind on `[0, t]`, ascending.
pub fn chebyshev_times(t: f64, degree: usize) -> Vec<f64> {
    let m = degree + 1;
    (0..m)
        .rev()
        .map(|j| {
            let x = (std::f64::consts::PI * (j as f64 + 0.5) / m as f64).cos();
            0.5 * t * (1.0 + x)
        })
        .collect()
}

/// Coefficients `c_k` from values at [`chebyshev_times`].
pub fn chebyshev_coefficients(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    (0..m)
        .map(|k| {
            // values are ascending in t, i.e. descending in the node index j
            let s: f64 = (0..m)
                .map(|j| values[m - 1 - j] * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / m as f64).cos())
                .sum();
            let c = 2.0 * s / m as f64;
            if k == 0 {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

/// Least-squares line through `(x, y)`: `(slope, intercept, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, icpt, r2)
}

/// Flow-map states at each requested time, stepping onto every time exactly
/// with substeps no longer than `dt`.
pub fn states_at_times(
    rho0: &DensityState,
    u0: &VectorField,
    times: &[f64],
    dt: f64,
    params: &EllipticParams,
) -> Result<Vec<FlowMapState>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("substep {dt} must be positive")));
    }
    let mut form = LagrangianFlow::new(rho0.clone(), *params);
    let mut y = FlowMapState::at_rest_map(u0);
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - y.t;
        if span < 0.0 {
            return Err(Error::InvalidParameter("sample times must ascend from 0".into()));
        }
        let m = (span / dt).ceil() as usize;
        for i in 0..m {
            let h = (target - y.t) / (m - i) as f64;
            form.guard(&y, h)?;
            y = rk4_step(&mut form, &y, h)?;
        }
        LagrangianFlow::set_time(&mut y, target);
        form.finish(&y)?;
        out.push(y.clone());
    }
    Ok(out)
}

/// One report per label.
pub fn run_analyticity(
    rho0: &DensityState,
    u0: &VectorField,
    labels: &[[f64; 3]],
    params: &AnalyticityParams,
) -> Result<Vec<AnalyticityReport>> {
    if params.degree < 16 {
        return Err(Error::InvalidParameter(format!("degree {} must be at least 16", params.degree)));
    }
    if !(params.t > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon {} must be positive", params.t)));
    }
    let times = chebyshev_times(params.t, params.degree);
    let states = states_at_times(rho0, u0, &times, params.dt, &params.elliptic)?;
    // W at every label for every sample time
    let mut disp: Vec<Vec<[f64; 3]>> = vec![Vec::with_capacity(times.len()); labels.len()];
    for s in &states {
        let w = evaluate_offgrid_many(&[&s.w[0], &s.w[1], &s.w[2]], labels, Method::Trig)?;
        for (l, d) in disp.iter_mut().enumerate() {
            d.push([w[0][l], w[1][l], w[2][l]]);
        }
    }
    Ok(labels
        .iter()
        .zip(disp)
        .map(|(&label, d)| report(label, &times, &d))
        .collect())
}

fn report(label: [f64; 3], times: &[f64], disp: &[[f64; 3]]) -> AnalyticityReport {
    let comps: Vec<Vec<f64>> = (0..3)
        .map(|a| chebyshev_coefficients(&disp.iter().map(|p| label[a] + p[a]).collect::<Vec<_>>()))
        .collect();
    let coefficients: Vec<f64> = (0..times.len())
        .map(|k| (comps[0][k].powi(2) + comps[1][k].powi(2) + comps[2][k].powi(2)).sqrt())
        .collect();
    let fit_last = (1..coefficients.len())
        .take_while(|&k| coefficients[k] > COEFF_FLOOR)
        .last()
        .unwrap_or(0);
    let trivially_analytic = fit_last + 1 < MIN_FIT_DEGREE;
    let (decay_rate, r_squared) = if trivially_analytic {
        (f64::INFINITY, 1.0)
    } else {
        let ks: Vec<f64> = (1..=fit_last).map(|k| k as f64).collect();
        let ys: Vec<f64> = (1..=fit_last).map(|k| coefficients[k].ln()).collect();
        let (slope, _, r2) = linear_fit(&ks, &ys);
        (-slope, r2)
    };
    AnalyticityReport {
        label,
        times: times.to_vec(),
        samples: disp
            .iter()
            .map(|p| std::array::from_fn(|a| label[a] + p[a]))
            .collect(),
        coefficients,
        decay_rate,
        fit_last,
        r_squared,
        trivially_analytic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;

    #[test]
    fn coefficients_of_polynomials() {
        let times = chebyshev_times(2.0, 16);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        // t = 1 + x on [0, 2]: c0 = 1, c1 = 1
        let c = chebyshev_coefficients(&times);
        assert!((c[0] - 1.0).abs() < 1e-14 && (c[1] - 1.0).abs() < 1e-14);
        assert!(c[2..].iter().all(|v| v.abs() < 1e-14));
        // T2(x) = 2x² − 1
        let c = chebyshev_coefficients(&times.iter().map(|t| 2.0 * (t - 1.0).powi(2) - 1.0).collect::<Vec<_>>());
        assert!((c[2] - 1.0).abs() < 1e-14 && c[0].abs() < 1e-14);
    }

    #[test]
    fn exponential_decay_has_unit_r2() {
        let ks = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = ks.iter().map(|k| 2.0 - 0.7 * k).collect();
        let (s, i, r2) = linear_fit(&ks, &ys);
        assert!((s + 0.7).abs() < 1e-14 && (i - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn equilibrium_and_translation_degenerate() {
        let g = GridSpec::periodic(8).unwrap();
        let rho = DensityState::uniform(g);
        let labels = [[0.3, 1.0, 2.0], g.node(5)];
        let p = AnalyticityParams {
            dt: 0.05,
            degree: 16,
            ..Default::default()
        };
        let r = run_analyticity(&rho, &VectorField::zeros(g), &labels, &p).unwrap();
        for rep in &r {
            assert!(rep.trivially_analytic);
            assert!(rep.coefficients[1..].iter().all(|c| *c <= 1e-10));
        }
        let c = [0.2, -0.1, 0.05];
        let r = run_analyticity(&rho, &VectorField::constant(g, c), &labels, &p).unwrap();
        for rep in &r {
            assert!(rep.trivially_analytic);
            assert!(rep.coefficients[2..].iter().all(|c| *c <= 1e-10));
            // c1 = T/2 · |c|
            let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            assert!((rep.coefficients[1] - 0.5 * norm).abs() < 1e-12);
        }
    }
}
