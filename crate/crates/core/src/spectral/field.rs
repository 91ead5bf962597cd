use std::ops::{Index, IndexMut};
use std::sync::OnceLock;

use num_complex::Complex64;

use super::fft;
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::sum::{max_abs, pairwise_sum};

/// Spectral coefficients of a field, `f(x) = Σ c(ξ) e^{iξ·x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "spectrum has {} modes, grid needs {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Replace every coefficient by `f(ξ, storage index, c)`.
    pub fn map_modes<F: Fn([f64; 3], usize, Complex64) -> Complex64>(mut self, f: F) -> Self {
        for idx in 0..self.data.len() {
            let xi = self.grid.wavevector(idx);
            self.data[idx] = f(xi, idx, self.data[idx]);
        }
        self
    }

    /// Multiply modewise by a real symbol of `|ξ|²`.
    pub fn scale_radial<F: Fn(f64) -> f64>(self, f: F) -> Self {
        self.map_modes(|xi, _, c| c * f(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]))
    }

    /// Spectral `∂/∂x_axis`; the Nyquist plane along `axis` is dropped.
    pub fn derivative(&self, axis: usize) -> Spectrum {
        let g = self.grid;
        let kv = g.axis_wavevectors();
        let n = g.n();
        let mut out = self.data.clone();
        for (idx, c) in out.iter_mut().enumerate() {
            let i = match axis {
                0 => idx % n,
                1 => (idx / n) % n,
                _ => idx / (n * n),
            };
            if g.is_nyquist(i) {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, kv[i]);
            }
        }
        Spectrum { grid: g, data: out }
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField::from_spectrum(self.clone())
    }

    /// Largest deviation from `c(-ξ) = conj c(ξ)`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.data.len())
            .map(|idx| (self.data[idx] - self.data[self.grid.conjugate_index(idx)].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Real nodal field with lazily cached spectral coefficients.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "scalar field".into(),
                index,
            });
        }
        Ok(Self::from_parts(grid, values))
    }

    pub(crate) fn from_parts(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid,
            values,
            coeffs: OnceLock::new(),
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self::from_parts(grid, vec![c; grid.len()])
    }

    /// Sample `f` at the grid nodes.
    pub fn from_fn<F: Fn([f64; 3]) -> f64>(grid: GridSpec, f: F) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.node(idx))).collect();
        Self::from_parts(grid, values)
    }

    /// Nodal field of a spectrum; the spectrum is kept as the coefficient cache.
    pub fn from_spectrum(spec: Spectrum) -> Self {
        let grid = spec.grid;
        let values = fft::inverse_real(&spec.data, grid.n());
        Self::with_coeffs(grid, values, spec.data)
    }

    pub(crate) fn with_coeffs(grid: GridSpec, values: Vec<f64>, coeffs: Vec<Complex64>) -> Self {
        let f = Self::from_parts(grid, values);
        let _ = f.coeffs.set(coeffs);
        f
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn has_coeffs(&self) -> bool {
        self.coeffs.get().is_some()
    }

    /// Spectral coefficients, computed on first use.
    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs
            .get_or_init(|| fft::forward_real(&self.values, self.grid.n()))
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum {
            grid: self.grid,
            data: self.coeffs().to_vec(),
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> ScalarField {
        Self::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &ScalarField, f: F) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        Self::from_parts(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| s * v)
    }

    /// `self + a * x`.
    pub fn axpy(&self, a: f64, x: &ScalarField) -> ScalarField {
        self.zip_map(x, |u, v| u + a * v)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// `∫ f dx` by the (spectrally exact) nodal rule.
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    /// Nodal `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        let v = &self.values;
        (crate::sum::pairwise_sum_by(v.len(), |i| v[i] * v[i]) * self.grid.cell_volume()).sqrt()
    }
}

/// Three scalar components on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    comps: [ScalarField; 3],
}

impl VectorField {
    pub fn new(comps: [ScalarField; 3]) -> Result<Self> {
        let grid = comps[0].grid;
        comps[1].grid.check_same(&grid, "vector component 1")?;
        comps[2].grid.check_same(&grid, "vector component 2")?;
        Ok(Self { grid, comps })
    }

    pub(crate) fn from_comps(comps: [ScalarField; 3]) -> Self {
        debug_assert!(comps.iter().all(|c| c.grid == comps[0].grid));
        Self {
            grid: comps[0].grid,
            comps,
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, [0.0; 3])
    }

    pub fn constant(grid: GridSpec, c: [f64; 3]) -> Self {
        Self::from_comps(c.map(|v| ScalarField::constant(grid, v)))
    }

    pub fn from_fn<F: Fn([f64; 3]) -> [f64; 3]>(grid: GridSpec, f: F) -> Self {
        let vals: Vec<[f64; 3]> = (0..grid.len()).map(|idx| f(grid.node(idx))).collect();
        Self::from_comps(std::array::from_fn(|a| {
            ScalarField::from_parts(grid, vals.iter().map(|v| v[a]).collect())
        }))
    }

    /// Nodal fields of three spectra via paired inverse transforms.
    pub fn from_spectra(specs: [Spectrum; 3]) -> Self {
        let grid = specs[0].grid;
        let n = grid.n();
        let mut vals = fft::inverse_real_many(&[&specs[0].data, &specs[1].data, &specs[2].data], n)
            .into_iter();
        let [a, b, c] = specs;
        Self::from_comps([
            ScalarField::with_coeffs(grid, vals.next().unwrap(), a.data),
            ScalarField::with_coeffs(grid, vals.next().unwrap(), b.data),
            ScalarField::with_coeffs(grid, vals.next().unwrap(), c.data),
        ])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn comps(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    pub fn into_comps(self) -> [ScalarField; 3] {
        self.comps
    }

    /// Fill missing coefficient caches, pairing transforms.
    pub fn ensure_coeffs(&self) {
        let missing: Vec<usize> = (0..3).filter(|&a| !self.comps[a].has_coeffs()).collect();
        if missing.len() < 2 {
            for &a in &missing {
                self.comps[a].coeffs();
            }
            return;
        }
        let n = self.grid.n();
        let slices: Vec<&[f64]> = missing.iter().map(|&a| self.comps[a].values()).collect();
        let specs = fft::forward_real_many(&slices, n);
        for (&a, spec) in missing.iter().zip(specs) {
            let _ = self.comps[a].coeffs.set(spec);
        }
    }

    pub fn spectra(&self) -> [Spectrum; 3] {
        self.ensure_coeffs();
        std::array::from_fn(|a| self.comps[a].spectrum())
    }

    /// Value at node `idx`.
    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [
            self.comps[0].values[idx],
            self.comps[1].values[idx],
            self.comps[2].values[idx],
        ]
    }

    pub fn map_comps<F: Fn(&ScalarField) -> ScalarField>(&self, f: F) -> VectorField {
        Self::from_comps(std::array::from_fn(|a| f(&self.comps[a])))
    }

    pub fn zip_comps<F: Fn(&ScalarField, &ScalarField) -> ScalarField>(
        &self,
        other: &VectorField,
        f: F,
    ) -> VectorField {
        Self::from_comps(std::array::from_fn(|a| f(&self.comps[a], &other.comps[a])))
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        self.zip_comps(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.zip_comps(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, s: f64) -> VectorField {
        self.map_comps(|c| c.scale(s))
    }

    pub fn axpy(&self, a: f64, x: &VectorField) -> VectorField {
        self.zip_comps(x, |u, v| u.axpy(a, v))
    }

    /// Multiply every component by a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> VectorField {
        self.map_comps(|c| c.mul(s))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    /// Largest nodal Euclidean length.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                let v = self.at(i);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.comps.iter().map(|c| c.l2_norm().powi(2)).sum();
        s.sqrt()
    }

    /// Pointwise `|u|²`.
    pub fn norm_squared(&self) -> ScalarField {
        let [a, b, c] = &self.comps;
        ScalarField::from_parts(
            self.grid,
            (0..self.grid.len())
                .map(|i| a.values[i] * a.values[i] + b.values[i] * b.values[i] + c.values[i] * c.values[i])
                .collect(),
        )
    }
}

impl Index<usize> for VectorField {
    type Output = ScalarField;
    fn index(&self, a: usize) -> &ScalarField {
        &self.comps[a]
    }
}

impl IndexMut<usize> for VectorField {
    fn index_mut(&mut self, a: usize) -> &mut ScalarField {
        &mut self.comps[a]
    }
}

/// Sobolev regularity index, required to exceed 5/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() && s > 2.5 {
            Ok(Self(s))
        } else {
            Err(Error::SobolevIndexTooSmall(s))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl Default for SobolevIndex {
    fn default() -> Self {
        Self(3.0)
    }
}

/// Coefficients of the trigonometric interpolant of `f`.
pub fn forward_transform(f: &ScalarField) -> Result<Spectrum> {
    if let Some(index) = f.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "forward transform input".into(),
            index,
        });
    }
    Ok(f.spectrum())
}

/// Nodal values of a spectrum (real part).
pub fn inverse_transform(spec: &Spectrum) -> ScalarField {
    spec.to_field()
}
