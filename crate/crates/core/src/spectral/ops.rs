use rustfft::num_complex::Complex64;

use super::{tensor_index, Grid, RealField, ScalarField, SpectralField, TensorField, VectorField};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Visits every spectral index with its derivative wavevector.
fn for_each_mode(grid: &Grid, mut f: impl FnMut(usize, [f64; 3])) {
    let n = grid.n();
    let kd = grid.k_deriv();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                f(grid.index(i, j, k), [kd[i], kd[j], kd[k]]);
            }
        }
    }
}

/// `G_ij = i k_j u_i`.
pub fn gradient_hat(u: &SpectralField<3>) -> SpectralField<9> {
    let grid = u.grid().clone();
    let mut out = SpectralField::<9>::zeros(&grid);
    let src = u.components();
    let dst = out.components_mut();
    for_each_mode(&grid, |idx, kv| {
        for i in 0..3 {
            let ik = I * src[i][idx];
            for j in 0..3 {
                dst[tensor_index(i, j)][idx] = ik * kv[j];
            }
        }
    });
    out
}

/// Row divergence `(div T)_i = sum_j i k_j T_ij`.
pub fn tensor_divergence_hat(t: &SpectralField<9>) -> SpectralField<3> {
    let grid = t.grid().clone();
    let mut out = SpectralField::<3>::zeros(&grid);
    let src = t.components();
    let dst = out.components_mut();
    for_each_mode(&grid, |idx, kv| {
        for i in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                acc += src[tensor_index(i, j)][idx] * kv[j];
            }
            dst[i][idx] = I * acc;
        }
    });
    out
}

pub fn divergence_hat(v: &SpectralField<3>) -> SpectralField<1> {
    let grid = v.grid().clone();
    let mut out = SpectralField::<1>::zeros(&grid);
    let src = v.components();
    let dst = out.components_mut();
    for_each_mode(&grid, |idx, kv| {
        let acc = src[0][idx] * kv[0] + src[1][idx] * kv[1] + src[2][idx] * kv[2];
        dst[0][idx] = I * acc;
    });
    out
}

/// Removes the gradient part mode by mode: `v - k (k . v) / |k|^2`; the mean is zeroed.
pub fn leray_project_in_place(v: &mut SpectralField<3>) {
    let grid = v.grid().clone();
    let comps = v.components_mut();
    for_each_mode(&grid, |idx, kv| {
        let k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
        if idx == 0 {
            comps.iter_mut().for_each(|c| c[0] = Complex64::new(0.0, 0.0));
        } else if k2 > 0.0 {
            let kdotv = comps[0][idx] * kv[0] + comps[1][idx] * kv[1] + comps[2][idx] * kv[2];
            let s = kdotv / k2;
            for (c, kc) in comps.iter_mut().zip(kv) {
                c[idx] -= s * kc;
            }
        }
    });
}

/// Zeros every mode with `|m| > n/3` along any axis.
pub fn dealias_in_place<const C: usize>(v: &mut SpectralField<C>) {
    let grid = v.grid().clone();
    let n = grid.n();
    let keep = grid.keep();
    let comps = v.components_mut();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                if !(keep[i] && keep[j] && keep[k]) {
                    let idx = grid.index(i, j, k);
                    comps
                        .iter_mut()
                        .for_each(|c| c[idx] = Complex64::new(0.0, 0.0));
                }
            }
        }
    }
}

pub fn dealias<const C: usize>(v: &SpectralField<C>) -> SpectralField<C> {
    let mut out = v.clone();
    dealias_in_place(&mut out);
    out
}

/// `(grad v)_ij = d v_i / d x_j`, differentiated spectrally.
pub fn gradient(v: &VectorField) -> TensorField {
    let mut g = gradient_hat(&v.to_spectral());
    g.zero_mean();
    g.to_real()
}

pub fn divergence(v: &VectorField) -> ScalarField {
    divergence_hat(&v.to_spectral()).to_real()
}

pub fn leray_project(v: &VectorField) -> VectorField {
    let mut h = v.to_spectral();
    leray_project_in_place(&mut h);
    h.to_real()
}

/// Nodal quadrature `sum |v|^2 dV`.
pub fn l2_norm_sq<const C: usize>(v: &RealField<C>) -> f64 {
    let sum: f64 = (0..v.grid().len())
        .map(|idx| v.components().iter().map(|c| c[idx] * c[idx]).sum::<f64>())
        .sum();
    sum * v.grid().cell_volume()
}

/// Nodal quadrature `sum |v|^3 dV`, `|.|` pointwise Euclidean/Frobenius.
pub fn l3_norm_cubed<const C: usize>(v: &RealField<C>) -> f64 {
    let sum: f64 = (0..v.grid().len())
        .map(|idx| v.magnitude_at(idx).powi(3))
        .sum();
    sum * v.grid().cell_volume()
}

/// Largest nodal magnitude.
pub fn linf_norm<const C: usize>(v: &RealField<C>) -> f64 {
    (0..v.grid().len())
        .map(|idx| v.magnitude_at(idx))
        .fold(0.0, f64::max)
}

pub fn inner_product<const C: usize>(a: &RealField<C>, b: &RealField<C>) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let sum: f64 = (0..a.grid().len())
        .map(|idx| {
            a.components()
                .iter()
                .zip(b.components())
                .map(|(x, y)| x[idx] * y[idx])
                .sum::<f64>()
        })
        .sum();
    Ok(sum * a.grid().cell_volume())
}

/// Parseval form of [`l2_norm_sq`]: `|Omega| / n^6 * sum |v_hat|^2`.
pub fn spectral_l2_norm_sq<const C: usize>(v: &SpectralField<C>) -> f64 {
    let g = v.grid();
    let n3 = g.len() as f64;
    let sum: f64 = v
        .components()
        .iter()
        .flat_map(|c| c.iter())
        .map(|z| z.norm_sqr())
        .sum();
    sum * g.volume() / (n3 * n3)
}
