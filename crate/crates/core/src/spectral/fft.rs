use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

pub(crate) struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Unnormalized forward transform of each component.
///
/// Real components are transformed two at a time as `a + i b` and separated
/// with `A(k) = (Z(k) + Z*(-k)) / 2`, `B(k) = (Z(k) - Z*(-k)) / 2i`.
pub(super) fn forward<const C: usize>(grid: &Grid, comps: &[Vec<f64>; C]) -> [Vec<Complex64>; C] {
    let fft = &grid.plans().forward;
    let n = grid.n();
    let pairs: Vec<(usize, Option<usize>)> = (0..C)
        .step_by(2)
        .map(|c| (c, (c + 1 < C).then_some(c + 1)))
        .collect();
    let packed: Vec<(Vec<Complex64>, Option<Vec<Complex64>>)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut z: Vec<Complex64> = match b {
                Some(b) => comps[a]
                    .iter()
                    .zip(&comps[b])
                    .map(|(&x, &y)| Complex64::new(x, y))
                    .collect(),
                None => comps[a].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            };
            transform_3d(&mut z, n, fft.as_ref());
            if b.is_none() {
                return (z, None);
            }
            let neg = |m: usize| (n - m) % n;
            let mut za = vec![Complex64::new(0.0, 0.0); z.len()];
            let mut zb = vec![Complex64::new(0.0, 0.0); z.len()];
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let idx = i + n * (j + n * k);
                        let m = z[neg(i) + n * (neg(j) + n * neg(k))].conj();
                        let d = z[idx] - m;
                        za[idx] = 0.5 * (z[idx] + m);
                        zb[idx] = Complex64::new(0.5 * d.im, -0.5 * d.re);
                    }
                }
            }
            (za, Some(zb))
        })
        .collect();
    let mut slots: [Option<Vec<Complex64>>; C] = std::array::from_fn(|_| None);
    for (&(a, b), (za, zb)) in pairs.iter().zip(packed) {
        slots[a] = Some(za);
        if let Some(b) = b {
            slots[b] = zb;
        }
    }
    slots.map(|s| s.expect("every component transformed"))
}

/// Inverse transform scaled by `1/n^3`; imaginary residue is discarded.
///
/// Spectra are combined pairwise as `A + i B`, which is exact for the
/// Hermitian spectra of real fields.
pub(super) fn inverse<const C: usize>(grid: &Grid, comps: &[Vec<Complex64>; C]) -> [Vec<f64>; C] {
    let fft = &grid.plans().inverse;
    let n = grid.n();
    let scale = 1.0 / grid.len() as f64;
    let pairs: Vec<(usize, Option<usize>)> = (0..C)
        .step_by(2)
        .map(|c| (c, (c + 1 < C).then_some(c + 1)))
        .collect();
    let done: Vec<(Vec<f64>, Option<Vec<f64>>)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut z = comps[a].clone();
            if let Some(b) = b {
                for (z, w) in z.iter_mut().zip(&comps[b]) {
                    *z += Complex64::new(-w.im, w.re);
                }
            }
            transform_3d(&mut z, n, fft.as_ref());
            let re = z.iter().map(|v| v.re * scale).collect();
            (re, b.map(|_| z.iter().map(|v| v.im * scale).collect()))
        })
        .collect();
    let mut slots: [Option<Vec<f64>>; C] = std::array::from_fn(|_| None);
    for (&(a, b), (ra, rb)) in pairs.iter().zip(done) {
        slots[a] = Some(ra);
        if let Some(b) = b {
            slots[b] = rb;
        }
    }
    slots.map(|s| s.expect("every component transformed"))
}

fn transform_3d(data: &mut [Complex64], n: usize, fft: &dyn Fft<f64>) {
    let n2 = n * n;
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n2];

    // x: contiguous lines
    fft.process_with_scratch(data, &mut scratch);

    // y: transpose each z-plane so y runs contiguously
    for plane in data.chunks_exact_mut(n2) {
        for j in 0..n {
            for i in 0..n {
                buf[i * n + j] = plane[i + n * j];
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for j in 0..n {
            for i in 0..n {
                plane[i + n * j] = buf[i * n + j];
            }
        }
    }

    // z: gather one y-slab at a time
    for j in 0..n {
        for k in 0..n {
            for i in 0..n {
                buf[i * n + k] = data[i + n * (j + n * k)];
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for k in 0..n {
            for i in 0..n {
                data[i + n * (j + n * k)] = buf[i * n + k];
            }
        }
    }
}
