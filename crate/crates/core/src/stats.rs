//! Dissipation time series, long-time averages and balance diagnostics.
//!
//! The long-time average `<phi> = limsup (1/T) int_0^T phi dt` is observed
//! through a finite window after spin-up. Each [`TimeAverage`] carries a
//! convergence metric, the largest relative drift of the running mean over
//! the second half of the window, so the proxy can be audited.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::integrator::SimState;
use crate::model::{dissipation_from_gradient, smagorinsky_flux, ModelParams};
use crate::spectral::{gradient, inner_product, l2_norm_sq, TensorField, VectorField};
use crate::{Error, Result};

/// Column order of the series CSV.
pub const SERIES_COLUMNS: [&str; 8] = ["t", "dt", "ke", "eps0", "epsdelta", "epsS", "fu", "usq"];

/// Column order of the force-balance sample CSV.
pub const BALANCE_COLUMNS: [&str; 5] = ["t", "uf", "adv", "visc", "smag"];

/// A window mean is "converged" when its drift metric is below this.
pub const CONVERGENCE_THRESHOLD: f64 = 0.01;

/// Relative tolerance on `|sum of balance terms - F^2| / F^2`.
pub const FORCE_BALANCE_TOLERANCE: f64 = 0.05;

/// Default spin-up in large-eddy turnover times `L / U`.
pub const SPINUP_TURNOVERS: f64 = 5.0;

pub const SUMMARY_SCHEMA: &str = "smagbox.summary/1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationRecord {
    pub t: f64,
    pub dt: f64,
    pub ke: f64,
    pub eps0: f64,
    pub epsdelta: f64,
    #[serde(rename = "epsS")]
    pub eps_s: f64,
    pub fu: f64,
    pub usq: f64,
}

/// Selects one column of a [`DissipationRecord`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Ke,
    Eps0,
    EpsDelta,
    EpsS,
    Fu,
    Usq,
}

impl Column {
    pub fn of(self, r: &DissipationRecord) -> f64 {
        match self {
            Column::Ke => r.ke,
            Column::Eps0 => r.eps0,
            Column::EpsDelta => r.epsdelta,
            Column::EpsS => r.eps_s,
            Column::Fu => r.fu,
            Column::Usq => r.usq,
        }
    }
}

/// Samples the energy-equality terms for state `s`; `dt` is the step that produced it.
pub fn record(s: &SimState, dt: f64, f: &VectorField, p: &ModelParams) -> Result<DissipationRecord> {
    record_with_gradient(s, &gradient(&s.u), dt, f, p)
}

/// [`record`] with `grad_u = gradient(s.u)` supplied by the caller.
pub fn record_with_gradient(
    s: &SimState,
    grad_u: &TensorField,
    dt: f64,
    f: &VectorField,
    p: &ModelParams,
) -> Result<DissipationRecord> {
    let vol = s.u.grid().volume();
    let d = dissipation_from_gradient(grad_u, p);
    let usq = l2_norm_sq(&s.u) / vol;
    Ok(DissipationRecord {
        t: s.t,
        dt,
        ke: 0.5 * usq,
        eps0: d.eps0,
        epsdelta: d.epsdelta,
        eps_s: d.eps0 + d.epsdelta,
        fu: inner_product(f, &s.u)? / vol,
        usq,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAverage {
    pub window_start: f64,
    pub window_end: f64,
    pub value: f64,
    pub convergence_metric: f64,
    /// Largest running mean over the second half of the window.
    pub running_max: f64,
}

impl TimeAverage {
    pub fn converged(&self) -> bool {
        self.convergence_metric < CONVERGENCE_THRESHOLD
    }
}

/// Trapezoidal mean of `(t, v)` samples with `t >= spinup`.
pub fn time_average_samples(t: &[f64], v: &[f64], spinup: f64) -> Result<TimeAverage> {
    let first = t.iter().position(|&ti| ti >= spinup).unwrap_or(t.len());
    let (t, v) = (&t[first..], &v[first..]);
    if t.len() < 2 || t[t.len() - 1] <= t[0] {
        return Err(Error::EmptyWindow(format!(
            "fewer than two samples after spin-up {spinup}"
        )));
    }
    let t0 = t[0];
    let t_end = t[t.len() - 1];
    let mid = t0 + 0.5 * (t_end - t0);
    let mut integral = 0.0;
    let mut running = Vec::with_capacity(t.len());
    for k in 1..t.len() {
        integral += 0.5 * (v[k] + v[k - 1]) * (t[k] - t[k - 1]);
        if t[k] >= mid {
            running.push(integral / (t[k] - t0));
        }
    }
    let value = integral / (t_end - t0);
    let drift = running
        .iter()
        .map(|r| (r - value).abs())
        .fold(0.0, f64::max);
    let convergence_metric = if drift == 0.0 {
        0.0
    } else if value == 0.0 {
        f64::INFINITY
    } else {
        drift / value.abs()
    };
    Ok(TimeAverage {
        window_start: t0,
        window_end: t_end,
        value,
        convergence_metric,
        running_max: running.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

pub fn time_average(series: &[DissipationRecord], column: Column, spinup: f64) -> Result<TimeAverage> {
    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    let v: Vec<f64> = series.iter().map(|r| column.of(r)).collect();
    time_average_samples(&t, &v, spinup)
}

/// `ke_end + int eps_S - ke_start - int (f,u)/|Omega|`, trapezoidal in time.
pub fn energy_balance_residual(series: &[DissipationRecord], ke_start: f64, ke_end: f64) -> f64 {
    let net: f64 = series
        .windows(2)
        .map(|w| 0.5 * ((w[0].eps_s - w[0].fu) + (w[1].eps_s - w[1].fu)) * (w[1].t - w[0].t))
        .sum();
    ke_end - ke_start + net
}

/// Residual of a whole series, using its first and last kinetic energies.
pub fn series_balance_residual(series: &[DissipationRecord]) -> f64 {
    match (series.first(), series.last()) {
        (Some(a), Some(b)) => energy_balance_residual(series, a.ke, b.ke),
        _ => 0.0,
    }
}

/// Integrands of the identity obtained by testing the momentum equation with `f`:
/// `F^2 = d/dt (u,f)/|Omega| - (uu, grad f)/|Omega| + nu (grad u, grad f)/|Omega|
///        + (sigma(u), grad f)/|Omega|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceSample {
    pub t: f64,
    /// `(u, f) / |Omega|`
    pub uf: f64,
    /// `(u u, grad f) / |Omega| = sum u_i u_j d_j f_i`
    pub adv: f64,
    /// `nu (grad u, grad f) / |Omega|`
    pub visc: f64,
    /// `((C_S delta)^2 |grad u| grad u, grad f) / |Omega|`
    pub smag: f64,
}

pub fn balance_sample(
    s: &SimState,
    f: &VectorField,
    grad_f: &TensorField,
    p: &ModelParams,
) -> Result<BalanceSample> {
    let grid = s.u.grid();
    let vol = grid.volume();
    let grad_u = gradient(&s.u);
    let mut uu = TensorField::zeros(grid);
    for idx in 0..grid.len() {
        let u = s.u.at(idx);
        for i in 0..3 {
            for j in 0..3 {
                uu.component_mut(3 * i + j)[idx] = u[i] * u[j];
            }
        }
    }
    let flux = smagorinsky_flux(&grad_u, p);
    Ok(BalanceSample {
        t: s.t,
        uf: inner_product(&s.u, f)? / vol,
        adv: inner_product(&uu, grad_f)? / vol,
        visc: p.nu * inner_product(&grad_u, grad_f)? / vol,
        smag: inner_product(&flux, grad_f)? / vol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceBalance {
    pub window_start: f64,
    pub window_end: f64,
    /// `((u(T) - u(t0), f) / |Omega|) / (T - t0)`
    pub transient: f64,
    /// `-<(uu, grad f)> / |Omega|`
    pub advective: f64,
    pub viscous: f64,
    pub smagorinsky: f64,
    pub sum: f64,
    pub f_sq: f64,
    /// `|sum - F^2| / F^2`
    pub relative_residual: f64,
    /// The identity is not yet satisfied within [`FORCE_BALANCE_TOLERANCE`].
    pub pre_stationary: bool,
}

pub fn force_balance_terms(samples: &[BalanceSample], f_scale: f64, spinup: f64) -> Result<ForceBalance> {
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let avg = |sel: fn(&BalanceSample) -> f64| -> Result<TimeAverage> {
        let v: Vec<f64> = samples.iter().map(sel).collect();
        time_average_samples(&t, &v, spinup)
    };
    let adv = avg(|s| s.adv)?;
    let visc = avg(|s| s.visc)?;
    let smag = avg(|s| s.smag)?;
    let first = samples.iter().position(|s| s.t >= spinup).unwrap_or(0);
    let (a, b) = (&samples[first], &samples[samples.len() - 1]);
    let transient = (b.uf - a.uf) / (b.t - a.t);
    let advective = -adv.value;
    let sum = transient + advective + visc.value + smag.value;
    let f_sq = f_scale * f_scale;
    let relative_residual = if f_sq > 0.0 {
        (sum - f_sq).abs() / f_sq
    } else {
        f64::INFINITY
    };
    Ok(ForceBalance {
        window_start: adv.window_start,
        window_end: adv.window_end,
        transient,
        advective,
        viscous: visc.value,
        smagorinsky: smag.value,
        sum,
        f_sq,
        relative_residual,
        pre_stationary: !(relative_residual <= FORCE_BALANCE_TOLERANCE),
    })
}

/// Spin-up of `turnovers * L / U`, with `U` re-estimated from the window it defines.
pub fn estimate_spinup(series: &[DissipationRecord], l_scale: f64, turnovers: f64) -> f64 {
    let t_end = series.last().map_or(0.0, |r| r.t);
    let mut spinup = 0.0;
    for _ in 0..50 {
        let Ok(avg) = time_average(series, Column::Usq, spinup) else {
            break;
        };
        let u = avg.value.max(0.0).sqrt();
        if u == 0.0 {
            return 0.0;
        }
        let next = (turnovers * l_scale / u).min(t_end);
        if (next - spinup).abs() <= 1e-12 * next.max(1.0) {
            return next;
        }
        spinup = next;
    }
    spinup
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spinup {
    Auto,
    Fixed(f64),
}

/// Model and force data needed to turn averages into `U`, `Re` and bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub nu: f64,
    pub cs: f64,
    pub delta: f64,
    pub variant: String,
    pub f_scale: f64,
    pub l_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub samples: usize,
    pub t_end: f64,
    pub spinup: f64,
    pub ke: TimeAverage,
    pub eps0: TimeAverage,
    pub epsdelta: TimeAverage,
    #[serde(rename = "epsS")]
    pub eps_s: TimeAverage,
    pub fu: TimeAverage,
    pub usq: TimeAverage,
    #[serde(rename = "U")]
    pub u_scale: f64,
    pub max_ke: f64,
    pub energy_balance_residual: f64,
    /// epsS and usq averages both below the drift threshold.
    pub converged: bool,
    pub meta: Option<RunMeta>,
    #[serde(rename = "L")]
    pub l_scale: Option<f64>,
    #[serde(rename = "F")]
    pub f_scale: Option<f64>,
    #[serde(rename = "Re")]
    pub re: Option<f64>,
    pub turnover_time: Option<f64>,
    pub window_turnovers: Option<f64>,
    pub force_balance: Option<ForceBalance>,
}

pub fn summarize(
    series: &[DissipationRecord],
    balance: Option<&[BalanceSample]>,
    meta: Option<&RunMeta>,
    spinup: Spinup,
) -> Result<Summary> {
    let spinup = match (spinup, meta) {
        (Spinup::Fixed(s), _) => s,
        (Spinup::Auto, Some(m)) => estimate_spinup(series, m.l_scale, SPINUP_TURNOVERS),
        (Spinup::Auto, None) => 0.0,
    };
    let avg = |c| time_average(series, c, spinup);
    let usq = avg(Column::Usq)?;
    let eps_s = avg(Column::EpsS)?;
    let u_scale = usq.value.max(0.0).sqrt();
    let max_ke = series.iter().map(|r| r.ke).fold(0.0, f64::max);
    let l_scale = meta.map(|m| m.l_scale);
    let re = meta.map(|m| m.l_scale * u_scale / m.nu);
    let turnover = l_scale.filter(|_| u_scale > 0.0).map(|l| l / u_scale);
    let force_balance = match (balance, meta) {
        (Some(b), Some(m)) if m.f_scale > 0.0 => Some(force_balance_terms(b, m.f_scale, spinup)?),
        _ => None,
    };
    Ok(Summary {
        schema: SUMMARY_SCHEMA.to_string(),
        samples: series.len(),
        t_end: series.last().map_or(0.0, |r| r.t),
        spinup,
        ke: avg(Column::Ke)?,
        eps0: avg(Column::Eps0)?,
        epsdelta: avg(Column::EpsDelta)?,
        fu: avg(Column::Fu)?,
        converged: eps_s.converged() && usq.converged(),
        window_turnovers: turnover.map(|tau| (eps_s.window_end - eps_s.window_start) / tau),
        eps_s,
        usq,
        u_scale,
        max_ke,
        energy_balance_residual: series_balance_residual(series),
        meta: meta.cloned(),
        l_scale,
        f_scale: meta.map(|m| m.f_scale),
        re,
        turnover_time: turnover,
        force_balance,
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path, columns: &[&str]) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != columns {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("expected columns {columns:?}, found {header:?}"),
        });
    }
    rdr.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Schema {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_series(path: &Path) -> Result<Vec<DissipationRecord>> {
    read_csv(path, &SERIES_COLUMNS)
}

pub fn read_balance(path: &Path) -> Result<Vec<BalanceSample>> {
    read_csv(path, &BALANCE_COLUMNS)
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let value: serde_json::Value = serde_json::from_reader(open(path)?).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    match value.get("schema").and_then(|s| s.as_str()) {
        Some(SUMMARY_SCHEMA) => {}
        other => {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: format!("expected schema {SUMMARY_SCHEMA}, found {other:?}"),
            })
        }
    }
    serde_json::from_value(value).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
