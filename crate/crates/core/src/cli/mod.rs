//! `smagbox` subcommands.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical instability,
//! 3 unconverged statistics (provisional bound check), 4 bound not satisfied.

pub mod config;
pub mod run;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{report_from_summary, BoundReport, BoundStatus};
use crate::forcing::{make_force, ForceScales};
use crate::stats::{read_balance, read_series, read_summary, summarize, RunMeta, Summary};
use crate::{Error, Result};
use config::{parse_overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INSTABILITY: i32 = 2;
pub const EXIT_PROVISIONAL: i32 = 3;
pub const EXIT_BOUND_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "smagbox", version, about = "Smagorinsky model on a forced periodic box")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation; config keys may be overridden as `--key=value`.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Continue a run directory from its checkpoint.
    Resume {
        dir: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Summarize a series CSV.
    Analyze {
        series: PathBuf,
        /// Force-balance samples written next to the series.
        #[arg(long)]
        balance: Option<PathBuf>,
        /// Configuration supplying nu, C_S, delta and the force (enables L, Re).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Print F, the four L candidates and L for the configured force.
    AnalyzeForce {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Check a summary against the dissipation bounds.
    VerifyBound { summary: PathBuf },
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    RunConfig::load(path, &parse_overrides(overrides)?)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Instability { .. } => EXIT_INSTABILITY,
        _ => EXIT_USAGE,
    }
}

pub fn analyze(
    series_path: &Path,
    balance_path: Option<&Path>,
    config: Option<&RunConfig>,
) -> Result<Summary> {
    let series = read_series(series_path)?;
    let balance = balance_path.map(read_balance).transpose()?;
    let (meta, spinup) = match config {
        Some(cfg) => {
            let meta = match cfg.force_family {
                Some(fam) => {
                    let f = make_force(fam, cfg.force_amplitude, cfg.force_mode, &cfg.grid()?)?;
                    Some(RunMeta {
                        nu: cfg.nu,
                        cs: cfg.cs,
                        delta: cfg.delta,
                        variant: cfg.variant.to_string(),
                        f_scale: f.scales.f_scale,
                        l_scale: f.scales.l_scale,
                    })
                }
                None => None,
            };
            (meta, cfg.spinup)
        }
        None => (None, crate::stats::Spinup::Auto),
    };
    summarize(&series, balance.as_deref(), meta.as_ref(), spinup)
}

#[derive(Debug, Serialize)]
pub struct ForceReport {
    pub family: String,
    pub amplitude: f64,
    pub mode: usize,
    #[serde(rename = "F")]
    pub f_scale: f64,
    pub l_candidates: [f64; 4],
    #[serde(rename = "L")]
    pub l_scale: f64,
}

pub fn analyze_force(cfg: &RunConfig) -> Result<ForceReport> {
    let family = cfg
        .force_family
        .ok_or_else(|| Error::config("force.family", "no force configured"))?;
    let spec = make_force(family, cfg.force_amplitude, cfg.force_mode, &cfg.grid()?)?;
    let s: ForceScales = spec.scales;
    Ok(ForceReport {
        family: family.to_string(),
        amplitude: spec.amplitude,
        mode: spec.mode,
        f_scale: s.f_scale,
        l_candidates: s.candidates(),
        l_scale: s.l_scale,
    })
}

pub fn verify_bound(summary_path: &Path) -> Result<BoundReport> {
    Ok(report_from_summary(&read_summary(summary_path)?))
}

/// One-line verdict printed after the report.
pub fn verdict(r: &BoundReport) -> (String, i32) {
    let margin = r.thm1_margin.unwrap_or(f64::NAN);
    match r.status {
        BoundStatus::Satisfied => (
            format!("PASS: <eps_S> = {:.6e} <= {:.6e} (margin {:.6e})", r.eps_measured, r.thm1_rhs.unwrap_or(f64::NAN), margin),
            EXIT_OK,
        ),
        BoundStatus::Provisional => (
            format!("FAIL: provisional, averages not converged (margin {margin:.6e})"),
            EXIT_PROVISIONAL,
        ),
        BoundStatus::Violation => (
            format!("FAIL: bound violated, <eps_S> = {:.6e} > {:.6e}", r.eps_measured, r.thm1_rhs.unwrap_or(f64::NAN)),
            EXIT_BOUND_FAILED,
        ),
        BoundStatus::DegenerateScales => (
            "FAIL: degenerate scales (U = 0 or no force), bound check skipped".to_string(),
            EXIT_BOUND_FAILED,
        ),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

/// Runs one subcommand and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            let out = run::run(&cfg)?;
            report_run(&cfg, out)
        }
        Command::Resume { dir, overrides } => {
            let out = run::resume(&dir, &parse_overrides(&overrides)?)?;
            report_run(&load_config(Some(&dir.join(run::CONFIG_FILE)), &[])?, out)
        }
        Command::Analyze {
            series,
            balance,
            config,
            out,
            overrides,
        } => {
            let cfg = match (&config, overrides.is_empty()) {
                (None, true) => None,
                _ => Some(load_config(config.as_deref(), &overrides)?),
            };
            let summary = analyze(&series, balance.as_deref(), cfg.as_ref())?;
            match out {
                Some(path) => fs::write(path, serde_json::to_string_pretty(&summary)?)?,
                None => print_json(&summary)?,
            }
            Ok(EXIT_OK)
        }
        Command::AnalyzeForce { config, overrides } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            print_json(&analyze_force(&cfg)?)?;
            Ok(EXIT_OK)
        }
        Command::VerifyBound { summary } => {
            let report = verify_bound(&summary)?;
            print_json(&report)?;
            let (line, code) = verdict(&report);
            println!("{line}");
            Ok(code)
        }
    }
}

fn report_run(cfg: &RunConfig, out: run::RunOutcome) -> Result<i32> {
    println!(
        "finished: step {} t = {:.6} -> {}",
        out.state.step_index,
        out.state.t,
        cfg.output_dir.display()
    );
    if let Some(s) = &out.summary {
        println!(
            "U = {:.6e}  <eps_S> = {:.6e}  converged = {}",
            s.u_scale, s.eps_s.value, s.converged
        );
    }
    Ok(EXIT_OK)
}
