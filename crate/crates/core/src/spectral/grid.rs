use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic cubic box `[0, L)^3` sampled with `n` nodes per axis.
///
/// Nodal arrays are stored x-fastest: `index(i, j, k) = i + n * (j + n * k)`.
/// Spectral arrays use the same layout, where storage index `i` along an
/// axis carries the signed wavenumber `i` for `i < n/2` and `i - n` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    length: f64,
}

impl GridSpec {
    /// Any even `n >= 8` whose prime factors are 2, 3 or 5 is accepted.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidGrid(format!("n = {n} must be at least 8")));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n = {n} must be even")));
        }
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m != 1 {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must factor into 2, 3 and 5"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length = {length} must be positive"
            )));
        }
        Ok(Self { n, length })
    }

    /// Grid on the default `2π` box.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total node count `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// `2π / L`, the wavevector of wavenumber one.
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI / self.length
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    /// Position of node `idx`.
    pub fn node(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unindex(idx);
        let h = self.spacing();
        [i as f64 * h, j as f64 * h, k as f64 * h]
    }

    pub fn nodes(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|idx| self.node(idx)).collect()
    }

    /// Signed wavenumber carried by storage index `i` along one axis.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index of a signed wavenumber in `[-n/2, n/2)`.
    #[inline]
    pub fn storage_index(&self, k: i64) -> usize {
        let n = self.n as i64;
        k.rem_euclid(n) as usize
    }

    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Wavevectors `2πk/L` along one axis, indexed by storage position.
    pub fn axis_wavevectors(&self) -> Vec<f64> {
        let s = self.base_wavenumber();
        (0..self.n).map(|i| s * self.wavenumber(i) as f64).collect()
    }

    /// Wavevector of spectral storage index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unindex(idx);
        let s = self.base_wavenumber();
        [
            s * self.wavenumber(i) as f64,
            s * self.wavenumber(j) as f64,
            s * self.wavenumber(k) as f64,
        ]
    }

    /// Integer wavenumbers of spectral storage index `idx`.
    pub fn wavenumbers(&self, idx: usize) -> [i64; 3] {
        let (i, j, k) = self.unindex(idx);
        [self.wavenumber(i), self.wavenumber(j), self.wavenumber(k)]
    }

    /// Storage index of the mode `-k` (conjugate partner).
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (i, j, k) = self.unindex(idx);
        let n = self.n;
        self.index((n - i) % n, (n - j) % n, (n - k) % n)
    }

    /// Fold a point into `[0, L)^3`.
    pub fn fold(&self, p: [f64; 3]) -> [f64; 3] {
        let l = self.length;
        let f = |x: f64| {
            let y = x.rem_euclid(l);
            if y >= l {
                0.0
            } else {
                y
            }
        };
        [f(p[0]), f(p[1]), f(p[2])]
    }

    /// Minimum-image displacement `a - b` on the torus.
    pub fn min_image(&self, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        let l = self.length;
        let f = |d: f64| d - l * (d / l).round();
        [f(a[0] - b[0]), f(a[1] - b[1]), f(a[2] - b[2])]
    }

    pub fn torus_distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let d = self.min_image(a, b);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub(crate) fn check_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: n = {} / L = {} vs n = {} / L = {}",
                self.n, self.length, other.n, other.length
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(4, 1.0).is_err());
        assert!(GridSpec::new(14, 1.0).is_err());
        assert!(GridSpec::new(9, 1.0).is_err());
        assert!(GridSpec::new(16, 0.0).is_err());
        assert!(GridSpec::new(16, -1.0).is_err());
        assert!(GridSpec::new(16, f64::NAN).is_err());
        assert!(GridSpec::new(16, 1.0).is_ok());
        assert!(GridSpec::new(48, 1.0).is_ok());
    }

    #[test]
    fn wavenumber_range_is_half_open() {
        let g = GridSpec::periodic(16).unwrap();
        let ks: Vec<i64> = (0..16).map(|i| g.wavenumber(i)).collect();
        assert_eq!(*ks.iter().min().unwrap(), -8);
        assert_eq!(*ks.iter().max().unwrap(), 7);
        for k in -8..8 {
            assert_eq!(g.wavenumber(g.storage_index(k)), k);
        }
        assert!(g.is_nyquist(8));
    }

    #[test]
    fn wavevectors_scale_with_length() {
        let g = GridSpec::new(8, 1.0).unwrap();
        let idx = g.index(1, 0, 7);
        let xi = g.wavevector(idx);
        assert!((xi[0] - 2.0 * PI).abs() < 1e-15);
        assert_eq!(xi[1], 0.0);
        assert!((xi[2] + 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn conjugate_index_is_involution() {
        let g = GridSpec::periodic(8).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.conjugate_index(g.conjugate_index(idx)), idx);
        }
    }

    #[test]
    fn min_image_wraps() {
        let g = GridSpec::periodic(8).unwrap();
        let d = g.min_image([0.1, 0.0, 0.0], [2.0 * PI - 0.1, 0.0, 0.0]);
        assert!((d[0] - 0.2).abs() < 1e-12);
    }
}
