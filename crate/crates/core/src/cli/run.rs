//! Simulation driver shared by `run` and `resume`.
//!
//! Output directory layout:
//!
//! - `config.txt`: the resolved configuration
//! - `series.csv`: one [`DissipationRecord`] per step, step 0 included
//! - `balance.csv`: force-balance samples every `stats.sample_interval` steps
//! - `snap_<step>.bin`: snapshots every `output.snapshot_interval` steps
//! - `checkpoint.bin`: last good state, rewritten atomically
//! - `summary.json`: averages and diagnostics
//! - `plot.gp`: gnuplot script for the series

use std::fs::{self, File, OpenOptions};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::config::{read_text, RunConfig};
use crate::forcing::{make_force, ForceSpec};
use crate::integrator::{
    cfl_dt_with_gradient, initial_condition, read_checkpoint, write_checkpoint, Integrator, SimState,
};
use crate::model::ModelParams;
use crate::spectral::snapshot::write_snapshot;
use crate::spectral::{gradient, TensorField, VectorField};
use crate::stats::{
    balance_sample, read_balance, read_series, record_with_gradient, summarize, write_rows, BalanceSample,
    DissipationRecord, RunMeta, Spinup, Summary,
};
use crate::{Error, Result};

pub const CONFIG_FILE: &str = "config.txt";
pub const SERIES_FILE: &str = "series.csv";
pub const BALANCE_FILE: &str = "balance.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "plot.gp";

/// Everything derived from a configuration that stays fixed during a run.
pub struct Setup {
    pub config: RunConfig,
    pub params: ModelParams,
    pub force: Option<ForceSpec>,
    pub force_field: VectorField,
    grad_force: TensorField,
    pub integrator: Integrator,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let grid = config.grid()?;
        let params = config.model_params()?;
        let force = config
            .force_family
            .map(|fam| make_force(fam, config.force_amplitude, config.force_mode, &grid))
            .transpose()?;
        let force_field = force
            .as_ref()
            .map_or_else(|| VectorField::zeros(&grid), |f| f.f.clone());
        let grad_force = gradient(&force_field);
        let integrator = Integrator::new(&force_field, params);
        Ok(Self {
            config: config.clone(),
            params,
            force,
            force_field,
            grad_force,
            integrator,
        })
    }

    pub fn meta(&self) -> Option<RunMeta> {
        self.force.as_ref().map(|f| RunMeta {
            nu: self.params.nu,
            cs: self.params.cs,
            delta: self.params.delta,
            variant: self.params.variant.to_string(),
            f_scale: f.scales.f_scale,
            l_scale: f.scales.l_scale,
        })
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub state: SimState,
    pub series: Vec<DissipationRecord>,
    pub balance: Vec<BalanceSample>,
    pub summary: Option<Summary>,
}

struct Writers {
    series: csv::Writer<File>,
    balance: csv::Writer<File>,
}

impl Writers {
    fn open(dir: &Path, append: bool) -> Result<Self> {
        let open = |name: &str| -> Result<csv::Writer<File>> {
            let path = dir.join(name);
            let file = if append {
                OpenOptions::new().append(true).open(&path)?
            } else {
                File::create(&path)?
            };
            Ok(csv::WriterBuilder::new().has_headers(!append).from_writer(file))
        };
        Ok(Self {
            series: open(SERIES_FILE)?,
            balance: open(BALANCE_FILE)?,
        })
    }
}

fn save_checkpoint(dir: &Path, s: &SimState, dt: f64) -> Result<()> {
    let tmp = dir.join(format!("{CHECKPOINT_FILE}.tmp"));
    write_checkpoint(BufWriter::new(File::create(&tmp)?), s, dt)?;
    fs::rename(tmp, dir.join(CHECKPOINT_FILE))?;
    Ok(())
}

fn save_snapshot(dir: &Path, s: &SimState) -> Result<()> {
    let path = dir.join(format!("snap_{:08}.bin", s.step_index));
    write_snapshot(BufWriter::new(File::create(path)?), &s.u, s.t)
}

/// Records, samples, checkpoints and steps until `t >= t_end`.
///
/// On entry the record (and balance sample, if due) of `state` must already
/// be written; `grad` is its velocity gradient.
fn drive(
    setup: &Setup,
    mut state: SimState,
    mut grad: TensorField,
    mut last_dt: f64,
    writers: &mut Writers,
    series: &mut Vec<DissipationRecord>,
    balance: &mut Vec<BalanceSample>,
) -> Result<SimState> {
    let cfg = &setup.config;
    let dir = &cfg.output_dir;
    while state.t < cfg.t_end {
        let dt = cfl_dt_with_gradient(&state.u, &grad, &setup.params, cfg.cfl_safety, cfg.dt_max);
        state = match setup.integrator.step(&state, dt) {
            Ok(s) => s,
            Err(e) => {
                writers.series.flush()?;
                writers.balance.flush()?;
                return Err(e);
            }
        };
        last_dt = dt;
        grad = emit(setup, &state, dt, writers, series, balance)?;
        if cfg.snapshot_interval > 0 && state.step_index % cfg.snapshot_interval == 0 {
            writers.series.flush()?;
            writers.balance.flush()?;
            save_snapshot(dir, &state)?;
            save_checkpoint(dir, &state, dt)?;
        }
    }
    writers.series.flush()?;
    writers.balance.flush()?;
    save_checkpoint(dir, &state, last_dt)?;
    Ok(state)
}

fn emit(
    setup: &Setup,
    state: &SimState,
    dt: f64,
    writers: &mut Writers,
    series: &mut Vec<DissipationRecord>,
    balance: &mut Vec<BalanceSample>,
) -> Result<TensorField> {
    let grad = gradient(&state.u);
    let rec = record_with_gradient(state, &grad, dt, &setup.force_field, &setup.params)?;
    writers.series.serialize(rec)?;
    series.push(rec);
    if setup.force.is_some() && state.step_index % setup.config.sample_interval == 0 {
        let b = balance_sample(state, &setup.force_field, &setup.grad_force, &setup.params)?;
        writers.balance.serialize(b)?;
        balance.push(b);
    }
    Ok(grad)
}

fn finish(setup: &Setup, state: SimState, series: Vec<DissipationRecord>, balance: Vec<BalanceSample>) -> Result<RunOutcome> {
    let dir = &setup.config.output_dir;
    let meta = setup.meta();
    let bal = setup.force.as_ref().map(|_| balance.as_slice());
    let summary = match summarize(&series, bal, meta.as_ref(), setup.config.spinup) {
        Ok(s) => Some(s),
        Err(Error::EmptyWindow(msg)) => {
            warn!("averaging window empty ({msg}); averaging from t = 0");
            summarize(&series, bal, meta.as_ref(), Spinup::Fixed(0.0)).ok()
        }
        Err(e) => return Err(e),
    };
    if let Some(s) = &summary {
        fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(s)?)?;
    }
    if setup.config.gnuplot {
        fs::write(dir.join(PLOT_FILE), gnuplot_script())?;
    }
    Ok(RunOutcome {
        state,
        series,
        balance,
        summary,
    })
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    for w in config.warnings() {
        warn!("{w}");
    }
    let setup = Setup::new(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), config.to_text())?;
    let grid = config.grid()?;
    let u0 = initial_condition(&grid, config.init_kind, config.init_amplitude, config.init_seed);
    let state = SimState::new(u0);
    info!("run: n = {}, t_end = {}, output {}", grid.n(), config.t_end, dir.display());

    let mut writers = Writers::open(dir, false)?;
    let mut series = Vec::new();
    let mut balance = Vec::new();
    let grad = emit(&setup, &state, 0.0, &mut writers, &mut series, &mut balance)?;
    save_checkpoint(dir, &state, 0.0)?;
    let state = drive(&setup, state, grad, 0.0, &mut writers, &mut series, &mut balance)?;
    finish(&setup, state, series, balance)
}

/// Continues the run stored in `dir` from its checkpoint; `overrides`
/// typically extend `time.t_end`.
pub fn resume(dir: &Path, overrides: &[(String, String)]) -> Result<RunOutcome> {
    let config_path = dir.join(CONFIG_FILE);
    let mut map = super::config::parse_key_values(&read_text(&config_path)?)?;
    for (k, v) in overrides {
        map.insert(k.clone(), v.clone());
    }
    map.insert("output.dir".into(), dir.display().to_string());
    let config = RunConfig::from_key_values(&map)?;
    fs::write(dir.join(CONFIG_FILE), config.to_text())?;
    let setup = Setup::new(&config)?;

    let ckpt_path = dir.join(CHECKPOINT_FILE);
    let file = File::open(&ckpt_path).map_err(|_| Error::NotFound(ckpt_path.clone()))?;
    let (state, last_dt) = read_checkpoint(file)?;
    if state.u.grid() != setup.integrator.grid() {
        return Err(Error::Schema {
            path: ckpt_path,
            message: "checkpoint grid differs from configuration".into(),
        });
    }

    // drop rows written after the checkpoint
    let mut series = read_series(&dir.join(SERIES_FILE))?;
    series.truncate(state.step_index as usize + 1);
    let mut balance = read_balance(&dir.join(BALANCE_FILE))?;
    balance.retain(|b| b.t <= state.t);
    write_rows(&dir.join(SERIES_FILE), &series)?;
    write_rows_with_header::<BalanceSample>(&dir.join(BALANCE_FILE), &balance)?;

    info!("resume: step {} at t = {}", state.step_index, state.t);
    let mut writers = Writers::open(dir, true)?;
    let grad = gradient(&state.u);
    let state = drive(&setup, state, grad, last_dt, &mut writers, &mut series, &mut balance)?;
    finish(&setup, state, series, balance)
}

/// Like [`write_rows`] but keeps the header when `rows` is empty.
fn write_rows_with_header<T: serde::Serialize>(path: &PathBuf, rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        fs::write(path, format!("{}\n", crate::stats::BALANCE_COLUMNS.join(",")))?;
        Ok(())
    } else {
        write_rows(path, rows)
    }
}

fn gnuplot_script() -> &'static str {
    "# gnuplot -persist plot.gp\n\
     set datafile separator ','\n\
     set key autotitle columnhead\n\
     set xlabel 't'\n\
     set multiplot layout 2,1\n\
     set ylabel 'dissipation'\n\
     plot 'series.csv' using 1:6 with lines, '' using 1:4 with lines, '' using 1:5 with lines, '' using 1:7 with lines\n\
     set ylabel 'energy'\n\
     plot 'series.csv' using 1:3 with lines\n\
     unset multiplot\n"
}
