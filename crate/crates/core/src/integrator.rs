//! Time stepping for the Leray-projected Smagorinsky equations.
//!
//! Viscosity is integrated exactly per mode through the factor
//! `exp(-nu |k|^2 dt)`; advection (skew-symmetric form), the Smagorinsky
//! divergence and the force are explicit. The two-stage scheme is Heun's
//! method applied to `exp(nu |k|^2 t) u_hat`, second order in `dt`.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{smagorinsky_flux, ModelParams};
use crate::spectral::snapshot::{read_snapshot, write_snapshot};
use crate::spectral::{
    dealias_in_place, gradient, gradient_hat, l2_norm_sq, leray_project_in_place, linf_norm,
    tensor_divergence_hat, tensor_index, Grid, RealField, SpectralField, TensorField,
    VectorField,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: VectorField,
    pub step_index: u64,
}

impl SimState {
    pub fn new(u: VectorField) -> Self {
        Self {
            t: 0.0,
            u,
            step_index: 0,
        }
    }

    /// `(1 / 2|Omega|) ||u||^2`.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * l2_norm_sq(&self.u) / self.u.grid().volume()
    }
}

/// Projects, dealiases and removes the mean.
pub fn admissible(u: &VectorField) -> VectorField {
    let mut h = u.to_spectral();
    dealias_in_place(&mut h);
    leray_project_in_place(&mut h);
    h.to_real()
}

pub struct Integrator {
    grid: Grid,
    params: ModelParams,
    force_hat: SpectralField<3>,
}

impl Integrator {
    /// The force is projected and dealiased once; it never changes.
    pub fn new(force: &VectorField, params: ModelParams) -> Self {
        let mut force_hat = force.to_spectral();
        dealias_in_place(&mut force_hat);
        leray_project_in_place(&mut force_hat);
        Self {
            grid: force.grid().clone(),
            params,
            force_hat,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Projected explicit right-hand side `P(-B(u) + div sigma(u) + f)`,
    /// with `B(u) = (u . grad u + div(u u)) / 2`. Viscosity is excluded.
    pub fn rhs_explicit(&self, s: &SimState) -> Result<VectorField> {
        if s.u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut u_hat = s.u.to_spectral();
        dealias_in_place(&mut u_hat);
        let out = self.rhs_hat(&u_hat).to_real();
        if !out.is_finite() {
            return Err(Error::Instability {
                t: s.t,
                step: s.step_index,
            });
        }
        Ok(out)
    }

    fn rhs_hat(&self, u_hat: &SpectralField<3>) -> SpectralField<3> {
        let grid = &self.grid;
        let g_hat = gradient_hat(u_hat);
        // inverse-transform u and grad u together
        let mut uc = u_hat.components().clone().into_iter();
        let mut gc = g_hat.components().clone().into_iter();
        let packed: [Vec<Complex64>; 12] = std::array::from_fn(|c| {
            if c < 3 {
                uc.next().unwrap()
            } else {
                gc.next().unwrap()
            }
        });
        let phys = SpectralField::from_components(grid, packed)
            .expect("packed components share the grid")
            .to_real();

        let c = self.params.coefficient();
        let mut grad = TensorField::zeros(grid);
        if c != 0.0 {
            for n in 0..9 {
                grad.component_mut(n).copy_from_slice(phys.component(3 + n));
            }
        }
        let flux = smagorinsky_flux(&grad, &self.params);

        // [adv (3) | T (9)] with adv_i = u_j G_ij / 2, T_ij = u_i u_j / 2 - sigma_ij
        let mut terms = RealField::<12>::zeros(grid);
        for idx in 0..grid.len() {
            let u = [
                phys.component(0)[idx],
                phys.component(1)[idx],
                phys.component(2)[idx],
            ];
            for i in 0..3 {
                let mut adv = 0.0;
                for j in 0..3 {
                    adv += u[j] * phys.component(3 + tensor_index(i, j))[idx];
                    terms.component_mut(3 + tensor_index(i, j))[idx] =
                        0.5 * u[i] * u[j] - flux.component(tensor_index(i, j))[idx];
                }
                terms.component_mut(i)[idx] = 0.5 * adv;
            }
        }
        let terms_hat = terms.to_spectral();
        let mut tc = terms_hat.components().clone().into_iter();
        let adv_hat = SpectralField::<3>::from_components(
            grid,
            std::array::from_fn(|_| tc.next().unwrap()),
        )
        .expect("same grid");
        let t_hat = SpectralField::<9>::from_components(
            grid,
            std::array::from_fn(|_| tc.next().unwrap()),
        )
        .expect("same grid");

        let mut rhs = tensor_divergence_hat(&t_hat);
        for i in 0..3 {
            let a = adv_hat.component(i);
            let f = self.force_hat.component(i);
            for (idx, r) in rhs.component_mut(i).iter_mut().enumerate() {
                *r = -*r - a[idx] + f[idx];
            }
        }
        dealias_in_place(&mut rhs);
        leray_project_in_place(&mut rhs);
        rhs
    }

    fn decay_factors(&self, dt: f64) -> Vec<f64> {
        let n = self.grid.n();
        let k_sq = self.grid.k_sq();
        let nu = self.params.nu;
        let mut out = vec![0.0; self.grid.len()];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    out[self.grid.index(i, j, k)] = (-nu * (k_sq[i] + k_sq[j] + k_sq[k]) * dt).exp();
                }
            }
        }
        out
    }

    /// Advances one step of size `dt`.
    pub fn step(&self, s: &SimState, dt: f64) -> Result<SimState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        if s.u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let unstable = || Error::Instability {
            t: s.t,
            step: s.step_index,
        };
        let decay = self.decay_factors(dt);

        let mut u0 = s.u.to_spectral();
        dealias_in_place(&mut u0);
        leray_project_in_place(&mut u0);

        let n1 = self.rhs_hat(&u0);
        let mut stage = SpectralField::<3>::zeros(&self.grid);
        for c in 0..3 {
            let (a, r) = (u0.component(c), n1.component(c));
            for (idx, out) in stage.component_mut(c).iter_mut().enumerate() {
                *out = (a[idx] + r[idx] * dt) * decay[idx];
            }
        }
        let n2 = self.rhs_hat(&stage);
        let mut next = SpectralField::<3>::zeros(&self.grid);
        let half = 0.5 * dt;
        for c in 0..3 {
            let (a, r1, r2) = (u0.component(c), n1.component(c), n2.component(c));
            for (idx, out) in next.component_mut(c).iter_mut().enumerate() {
                *out = (a[idx] + r1[idx] * half) * decay[idx] + r2[idx] * half;
            }
        }
        let u = next.to_real();
        if !u.is_finite() {
            return Err(unstable());
        }
        Ok(SimState {
            t: s.t + dt,
            u,
            step_index: s.step_index + 1,
        })
    }
}

/// `safety * min(h / max|u|, h^2 / (2 (C_S delta)^2 max|grad u|))`, capped at `dt_max`.
pub fn cfl_dt(u: &VectorField, p: &ModelParams, safety: f64, dt_max: f64) -> f64 {
    if p.coefficient() > 0.0 {
        cfl_dt_with_gradient(u, &gradient(u), p, safety, dt_max)
    } else {
        cfl_dt_with_gradient(u, &TensorField::zeros(u.grid()), p, safety, dt_max)
    }
}

/// [`cfl_dt`] with `grad_u = gradient(u)` supplied by the caller.
pub fn cfl_dt_with_gradient(
    u: &VectorField,
    grad_u: &TensorField,
    p: &ModelParams,
    safety: f64,
    dt_max: f64,
) -> f64 {
    let h = u.grid().spacing();
    let umax = linf_norm(u);
    let advective = if umax > 0.0 { h / umax } else { f64::INFINITY };
    let c = p.coefficient();
    let parabolic = if c > 0.0 {
        let gmax = linf_norm(grad_u);
        h * h / (2.0 * c * gmax + f64::MIN_POSITIVE)
    } else {
        f64::INFINITY
    };
    (safety * advective.min(parabolic)).min(dt_max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zero,
    TaylorGreen,
    Random,
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InitKind::Zero),
            "taylor_green" => Ok(InitKind::TaylorGreen),
            "random" => Ok(InitKind::Random),
            other => Err(Error::config(
                "init.kind",
                format!("expected zero, taylor_green or random, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitKind::Zero => "zero",
            InitKind::TaylorGreen => "taylor_green",
            InitKind::Random => "random",
        })
    }
}

/// Highest integer mode populated by the random initial condition.
const RANDOM_INIT_MAX_MODE: i64 = 2;

/// Initial velocity; always solenoidal, zero-mean and dealiased.
///
/// `amplitude` is the peak velocity for Taylor-Green and the rms velocity
/// `sqrt(||u||^2 / |Omega|)` for the random field.
pub fn initial_condition(grid: &Grid, kind: InitKind, amplitude: f64, seed: u64) -> VectorField {
    match kind {
        InitKind::Zero => VectorField::zeros(grid),
        InitKind::TaylorGreen => {
            let k = 2.0 * std::f64::consts::PI / grid.box_length();
            admissible(&VectorField::from_fn(grid, |x, y, z| {
                let (x, y, z) = (k * x, k * y, k * z);
                [
                    amplitude * x.sin() * y.cos() * z.cos(),
                    -amplitude * x.cos() * y.sin() * z.cos(),
                    0.0,
                ]
            }))
        }
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut h = SpectralField::<3>::zeros(grid);
            let n = grid.n();
            let max_mode = RANDOM_INIT_MAX_MODE.min(grid.dealias_cutoff() as i64);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let m = [grid.mode(i), grid.mode(j), grid.mode(k)];
                        if m.iter().all(|v| v.abs() <= max_mode) {
                            let idx = grid.index(i, j, k);
                            for c in 0..3 {
                                h.component_mut(c)[idx] =
                                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                            }
                        }
                    }
                }
            }
            // the real part of the inverse symmetrizes the spectrum
            let mut u = admissible(&h.to_real());
            let rms = (l2_norm_sq(&u) / grid.volume()).sqrt();
            if rms > 0.0 {
                u.scale(amplitude / rms);
            }
            u
        }
    }
}

const CHECKPOINT_TAG: &str = "SMAGCKPT";

/// Checkpoint: one ASCII line `SMAGCKPT step_index=<n> dt=<dt>` followed by a snapshot.
pub fn write_checkpoint<W: Write>(mut w: W, s: &SimState, dt: f64) -> Result<()> {
    writeln!(w, "{CHECKPOINT_TAG} step_index={} dt={dt:e}", s.step_index)?;
    write_snapshot(&mut w, &s.u, s.t)
}

/// Returns the state and the last step size.
pub fn read_checkpoint<R: Read>(r: R) -> Result<(SimState, f64)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let schema = |message: &str| Error::Schema {
        path: Default::default(),
        message: message.to_string(),
    };
    let mut parts = line.trim_end().split(' ');
    if parts.next() != Some(CHECKPOINT_TAG) {
        return Err(schema("missing checkpoint header"));
    }
    let mut step = None;
    let mut dt = None;
    for part in parts {
        match part.split_once('=') {
            Some(("step_index", v)) => step = v.parse::<u64>().ok(),
            Some(("dt", v)) => dt = v.parse::<f64>().ok(),
            _ => return Err(schema("unexpected checkpoint header field")),
        }
    }
    let (step, dt) = step.zip(dt).ok_or_else(|| schema("incomplete checkpoint header"))?;
    let (u, t) = read_snapshot(reader)?;
    Ok((
        SimState {
            t,
            u,
            step_index: step,
        },
        dt,
    ))
}
