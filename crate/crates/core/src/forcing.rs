//! Steady body forces and their global scales.
//!
//! `F = (||f||^2 / |Omega|)^(1/2)` and `L` is the smallest of
//!
//! - `|Omega|^(1/3)`
//! - `F / ||grad f||_inf`
//! - `F / (||grad f||^2 / |Omega|)^(1/2)`
//! - `F / (||grad f||_3^3 / |Omega|)^(1/3)`

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::spectral::{gradient, l2_norm_sq, l3_norm_cubed, linf_norm, Grid, VectorField};
use crate::{Error, Result};

/// Relative slack allowed when re-checking the inequalities that define `L`.
pub const SCALE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceFamily {
    /// `A (sin(k z), 0, 0)`
    SingleModeShear,
    /// `A (sin kx cos ky cos kz, -cos kx sin ky cos kz, 0)`
    TaylorGreen,
    /// `A (sin kz + cos ky, sin kx + cos kz, sin ky + cos kx)`
    AbcLike,
}

impl FromStr for ForceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_mode_shear" => Ok(ForceFamily::SingleModeShear),
            "taylor_green" => Ok(ForceFamily::TaylorGreen),
            "abc_like" => Ok(ForceFamily::AbcLike),
            other => Err(Error::config(
                "force.family",
                format!("expected single_mode_shear, taylor_green or abc_like, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for ForceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForceFamily::SingleModeShear => "single_mode_shear",
            ForceFamily::TaylorGreen => "taylor_green",
            ForceFamily::AbcLike => "abc_like",
        })
    }
}

/// `F`, the four candidates for `L`, and their minimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceScales {
    pub f_scale: f64,
    pub l_box: f64,
    pub l_linf: f64,
    pub l_l2: f64,
    pub l_l3: f64,
    pub l_scale: f64,
}

impl ForceScales {
    pub fn candidates(&self) -> [f64; 4] {
        [self.l_box, self.l_linf, self.l_l2, self.l_l3]
    }
}

#[derive(Clone, Debug)]
pub struct ForceSpec {
    pub f: VectorField,
    pub family: ForceFamily,
    pub amplitude: f64,
    pub mode: usize,
    pub scales: ForceScales,
}

pub fn make_force(family: ForceFamily, amplitude: f64, mode: usize, grid: &Grid) -> Result<ForceSpec> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::config(
            "force.amplitude",
            format!("must be > 0, got {amplitude}"),
        ));
    }
    if mode < 1 || mode > grid.dealias_cutoff() {
        return Err(Error::config(
            "force.mode",
            format!(
                "must lie in 1..={} (dealiasing cutoff), got {mode}",
                grid.dealias_cutoff()
            ),
        ));
    }
    let k = 2.0 * PI * mode as f64 / grid.box_length();
    let a = amplitude;
    let f = match family {
        ForceFamily::SingleModeShear => {
            VectorField::from_fn(grid, |_, _, z| [a * (k * z).sin(), 0.0, 0.0])
        }
        ForceFamily::TaylorGreen => VectorField::from_fn(grid, |x, y, z| {
            let (x, y, z) = (k * x, k * y, k * z);
            [
                a * x.sin() * y.cos() * z.cos(),
                -a * x.cos() * y.sin() * z.cos(),
                0.0,
            ]
        }),
        ForceFamily::AbcLike => VectorField::from_fn(grid, |x, y, z| {
            let (x, y, z) = (k * x, k * y, k * z);
            [
                a * (z.sin() + y.cos()),
                a * (x.sin() + z.cos()),
                a * (y.sin() + x.cos()),
            ]
        }),
    };
    let scales = force_scales(&f)?;
    Ok(ForceSpec {
        f,
        family,
        amplitude,
        mode,
        scales,
    })
}

pub fn force_scales(f: &VectorField) -> Result<ForceScales> {
    let grid = f.grid();
    let vol = grid.volume();
    let f_scale = (l2_norm_sq(f) / vol).sqrt();
    if f_scale == 0.0 || !f_scale.is_finite() {
        return Err(Error::DegenerateForce(
            "force vanishes identically, L is undefined".into(),
        ));
    }
    let grad = gradient(f);
    let g_inf = linf_norm(&grad);
    let g_2 = (l2_norm_sq(&grad) / vol).sqrt();
    let g_3 = (l3_norm_cubed(&grad) / vol).cbrt();
    let ratio = |g: f64| if g > 0.0 { f_scale / g } else { f64::INFINITY };
    let l_box = vol.cbrt();
    let scales = ForceScales {
        f_scale,
        l_box,
        l_linf: ratio(g_inf),
        l_l2: ratio(g_2),
        l_l3: ratio(g_3),
        l_scale: [l_box, ratio(g_inf), ratio(g_2), ratio(g_3)]
            .into_iter()
            .fold(f64::INFINITY, f64::min),
    };

    let (fl, l) = (f_scale / scales.l_scale, scales.l_scale);
    let checks = [
        (g_inf, fl, "||grad f||_inf <= F/L"),
        (g_2 * g_2, fl * fl, "||grad f||^2/|Omega| <= F^2/L^2"),
        (g_3.powi(3), fl.powi(3), "||grad f||_3^3/|Omega| <= F^3/L^3"),
    ];
    for (lhs, rhs, what) in checks {
        if lhs > rhs * (1.0 + SCALE_SLACK) {
            return Err(Error::DegenerateForce(format!(
                "{what} violated: {lhs} > {rhs} (L = {l})"
            )));
        }
    }
    Ok(scales)
}
