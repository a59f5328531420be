//! Fields on the periodic box `(0, L)^3`.
//!
//! Values are stored x-fastest, then y, then z: node `(i, j, k)` lives at
//! `i + n * (j + n * k)`. Spectral coefficients use the same layout with the
//! unnormalized forward DFT; the inverse transform divides by `n^3`.
//!
//! Physical fields carry zero spatial mean. Pressure never appears: it is
//! removed by [`leray_project`].

mod fft;
mod ops;
pub mod snapshot;

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::{Error, Result};

pub use ops::{
    dealias, dealias_in_place, divergence, divergence_hat, gradient, gradient_hat, inner_product,
    l2_norm_sq, l3_norm_cubed, leray_project, leray_project_in_place, linf_norm,
    spectral_l2_norm_sq, tensor_divergence_hat,
};

/// Flat index of tensor entry `(i, j)`, i.e. `d u_i / d x_j` for a gradient.
pub const fn tensor_index(i: usize, j: usize) -> usize {
    3 * i + j
}

struct GridTables {
    fft: fft::Plans,
    /// Wavenumber used for odd derivatives; the Nyquist entry is zero.
    k_deriv: Vec<f64>,
    /// Squared wavenumber per axis index, Nyquist included.
    k_sq: Vec<f64>,
    /// Per axis index: mode survives the 2/3 rule.
    keep: Vec<bool>,
}

/// Uniform `n^3` grid on a cubic periodic box.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    box_length: f64,
    tables: Arc<GridTables>,
}

impl Grid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 4, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive, got {box_length}"
            )));
        }
        let cutoff = (n / 3) as i64;
        let base = 2.0 * std::f64::consts::PI / box_length;
        let modes: Vec<i64> = (0..n).map(|i| signed_mode(i, n)).collect();
        let k_deriv = modes
            .iter()
            .map(|&m| {
                if m.unsigned_abs() as usize == n / 2 {
                    0.0
                } else {
                    base * m as f64
                }
            })
            .collect();
        let k_sq = modes.iter().map(|&m| (base * m as f64).powi(2)).collect();
        let keep = modes.iter().map(|&m| m.abs() <= cutoff).collect();
        Ok(Self {
            n,
            box_length,
            tables: Arc::new(GridTables {
                fft: fft::Plans::new(n),
                k_deriv,
                k_sq,
                keep,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// `|Omega| = L^3`.
    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Number of nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest retained integer mode under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Physical wavenumber `2 pi m / L` of integer mode `m`.
    pub fn wavenumber(&self, m: i64) -> f64 {
        2.0 * std::f64::consts::PI * m as f64 / self.box_length
    }

    /// Signed integer mode stored at axis index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        signed_mode(i, self.n)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    /// Physical coordinate of axis index `i`.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub(crate) fn k_deriv(&self) -> &[f64] {
        &self.tables.k_deriv
    }

    pub(crate) fn k_sq(&self) -> &[f64] {
        &self.tables.k_sq
    }

    pub(crate) fn keep(&self) -> &[bool] {
        &self.tables.keep
    }

    pub(crate) fn plans(&self) -> &fft::Plans {
        &self.tables.fft
    }
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.box_length.to_bits() == other.box_length.to_bits()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("box_length", &self.box_length)
            .finish()
    }
}

/// Real-space field with `C` components (1 scalar, 3 vector, 9 tensor).
#[derive(Clone, Debug, PartialEq)]
pub struct RealField<const C: usize> {
    grid: Grid,
    comps: [Vec<f64>; C],
}

pub type ScalarField = RealField<1>;
pub type VectorField = RealField<3>;
pub type TensorField = RealField<9>;

/// Spectral coefficients of a real field with `C` components.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<const C: usize> {
    grid: Grid,
    comps: [Vec<Complex64>; C],
}

impl<const C: usize> RealField<C> {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            comps: std::array::from_fn(|_| vec![0.0; grid.len()]),
        }
    }

    pub fn from_components(grid: &Grid, comps: [Vec<f64>; C]) -> Result<Self> {
        for (c, v) in comps.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(Error::Shape {
                    component: c,
                    got: v.len(),
                    expected: grid.len(),
                });
            }
        }
        Ok(Self {
            grid: grid.clone(),
            comps,
        })
    }

    /// Samples `f(x, y, z)` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64, f64) -> [f64; C]) -> Self {
        let mut out = Self::zeros(grid);
        let n = grid.n();
        for k in 0..n {
            let z = grid.coord(k);
            for j in 0..n {
                let y = grid.coord(j);
                for i in 0..n {
                    let v = f(grid.coord(i), y, z);
                    let idx = grid.index(i, j, k);
                    for (comp, value) in out.comps.iter_mut().zip(v) {
                        comp[idx] = value;
                    }
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>; C] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; C] {
        self.comps
    }

    /// Pointwise values of all components at node `idx`.
    pub fn at(&self, idx: usize) -> [f64; C] {
        std::array::from_fn(|c| self.comps[c][idx])
    }

    /// Pointwise Euclidean (Frobenius for tensors) magnitude at node `idx`.
    pub fn magnitude_at(&self, idx: usize) -> f64 {
        self.comps
            .iter()
            .map(|c| c[idx] * c[idx])
            .sum::<f64>()
            .sqrt()
    }

    pub fn mean(&self, c: usize) -> f64 {
        self.comps[c].iter().sum::<f64>() / self.grid.len() as f64
    }

    pub fn remove_mean(&mut self) {
        for c in 0..C {
            let m = self.mean(c);
            self.comps[c].iter_mut().for_each(|v| *v -= m);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, factor: f64) {
        self.comps
            .iter_mut()
            .for_each(|c| c.iter_mut().for_each(|v| *v *= factor));
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += factor * y);
        }
        Ok(out)
    }

    pub fn to_spectral(&self) -> SpectralField<C> {
        SpectralField {
            grid: self.grid.clone(),
            comps: fft::forward(&self.grid, &self.comps),
        }
    }
}

impl<const C: usize> SpectralField<C> {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            comps: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); grid.len()]),
        }
    }

    pub fn from_components(grid: &Grid, comps: [Vec<Complex64>; C]) -> Result<Self> {
        for (c, v) in comps.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(Error::Shape {
                    component: c,
                    got: v.len(),
                    expected: grid.len(),
                });
            }
        }
        Ok(Self {
            grid: grid.clone(),
            comps,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>; C] {
        &self.comps
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Vec<Complex64>; C] {
        &mut self.comps
    }

    /// Magnitude of the largest `k = 0` coefficient, normalized like a nodal mean.
    pub fn mean_magnitude(&self) -> f64 {
        let n3 = self.grid.len() as f64;
        self.comps
            .iter()
            .map(|c| c[0].norm() / n3)
            .fold(0.0, f64::max)
    }

    pub fn zero_mean(&mut self) {
        self.comps
            .iter_mut()
            .for_each(|c| c[0] = Complex64::new(0.0, 0.0));
    }

    pub fn to_real(&self) -> RealField<C> {
        RealField {
            grid: self.grid.clone(),
            comps: fft::inverse(&self.grid, &self.comps),
        }
    }
}
