//! Three-dimensional complex FFTs on cubic grids.
//!
//! Each axis pass transforms the contiguous axis and then rotates the array
//! so the next axis becomes contiguous; three passes restore the layout.
//! Real fields are transformed two at a time by packing them as `f + i g`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// `dst[j + n (k + n i)] = src[i + n (j + n k)]`, tiled for cache reuse.
fn rotate(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const TILE: usize = 8;
    let nn = n * n;
    for k in 0..n {
        let plane = &src[nn * k..nn * (k + 1)];
        for j0 in (0..n).step_by(TILE) {
            for i0 in (0..n).step_by(TILE) {
                for j in j0..(j0 + TILE).min(n) {
                    let row = &plane[n * j..n * (j + 1)];
                    let base = j + n * k;
                    for i in i0..(i0 + TILE).min(n) {
                        dst[base + nn * i] = row[i];
                    }
                }
            }
        }
    }
}

fn transform(data: &mut [Complex64], n: usize, inverse: bool) {
    assert_eq!(data.len(), n * n * n, "buffer length must be n^3");
    let p = plans(n);
    let fft = if inverse { &p.inverse } else { &p.forward };
    thread_local! {
        static BUFFERS: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
    }
    BUFFERS.with(|cell| {
        let (scratch, tmp) = &mut *cell.borrow_mut();
        scratch.resize(fft.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        tmp.resize(data.len(), Complex64::new(0.0, 0.0));
        fft.process_with_scratch(data, scratch);
        rotate(data, tmp, n);
        fft.process_with_scratch(tmp, scratch);
        rotate(tmp, data, n);
        fft.process_with_scratch(data, scratch);
        rotate(data, tmp, n);
        data.copy_from_slice(tmp);
    });
}

/// Unnormalized forward transform with kernel `e^{-2πi jk/n}` along each axis.
pub fn forward_in_place(data: &mut [Complex64], n: usize) {
    transform(data, n, false);
}

/// Unnormalized inverse transform with kernel `e^{+2πi jk/n}` along each axis.
pub fn inverse_in_place(data: &mut [Complex64], n: usize) {
    transform(data, n, true);
}

/// Coefficients `c` with `f(x_j) = Σ_k c_k e^{i k·x_j}`.
pub fn forward_real(values: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_in_place(&mut buf, n);
    let scale = 1.0 / buf.len() as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Forward transform of two real fields with a single complex FFT.
pub fn forward_real_pair(f: &[f64], g: &[f64], n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    assert_eq!(f.len(), g.len());
    let mut z: Vec<Complex64> = f
        .iter()
        .zip(g)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    forward_in_place(&mut z, n);
    let scale = 0.5 / z.len() as f64;
    let mut cf = Vec::with_capacity(z.len());
    let mut cg = Vec::with_capacity(z.len());
    let neg = |i: usize| if i == 0 { 0 } else { n - i };
    for k in 0..n {
        let ck = n * n * neg(k);
        for j in 0..n {
            let row = n * (j + n * k);
            let crow = n * neg(j) + ck;
            for i in 0..n {
                let a = z[row + i];
                let b = z[crow + neg(i)].conj();
                cf.push((a + b) * scale);
                // (a - b) / (2i)
                let d = (a - b) * scale;
                cg.push(Complex64::new(d.im, -d.re));
            }
        }
    }
    (cf, cg)
}

/// Forward transforms of several real fields, pairing them where possible.
pub fn forward_real_many(fields: &[&[f64]], n: usize) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(fields.len());
    let mut chunks = fields.chunks(2);
    for chunk in &mut chunks {
        if chunk.len() == 2 {
            let (a, b) = forward_real_pair(chunk[0], chunk[1], n);
            out.push(a);
            out.push(b);
        } else {
            out.push(forward_real(chunk[0], n));
        }
    }
    out
}

/// Nodal values of a Hermitian spectrum (real part of the inverse sum).
pub fn inverse_real(coeffs: &[Complex64], n: usize) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    inverse_in_place(&mut buf, n);
    buf.iter().map(|c| c.re).collect()
}

/// Inverse transform of two Hermitian spectra with a single complex FFT.
pub fn inverse_real_pair(a: &[Complex64], b: &[Complex64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), b.len());
    let mut z: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x + Complex64::new(-y.im, y.re))
        .collect();
    inverse_in_place(&mut z, n);
    let f = z.iter().map(|c| c.re).collect();
    let g = z.iter().map(|c| c.im).collect();
    (f, g)
}

/// Inverse transforms of several Hermitian spectra, pairing them where possible.
pub fn inverse_real_many(specs: &[&[Complex64]], n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(specs.len());
    for chunk in specs.chunks(2) {
        if chunk.len() == 2 {
            let (f, g) = inverse_real_pair(chunk[0], chunk[1], n);
            out.push(f);
            out.push(g);
        } else {
            out.push(inverse_real(chunk[0], n));
        }
    }
    out
}
