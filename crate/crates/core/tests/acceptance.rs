//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! Run with `cargo test --release --test acceptance`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smagbox::bounds::{theorem1_rhs, theorem2_rhs, BoundInputs, BoundStatus};
use smagbox::cli::config::RunConfig;
use smagbox::cli::run::{run, RunOutcome};
use smagbox::cli::verdict;
use smagbox::forcing::{make_force, ForceFamily};
use smagbox::integrator::{initial_condition, InitKind, Integrator, SimState};
use smagbox::model::{dissipation_pair, dissipativity_check, ModelParams, Variant};
use smagbox::spectral::{
    gradient, inner_product, l2_norm_sq, l3_norm_cubed, leray_project, linf_norm,
    spectral_l2_norm_sq, Grid, VectorField,
};
use smagbox::stats::{record, series_balance_residual, DissipationRecord};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: &str, title: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = out.pass && in_time;
        if !pass {
            self.failures += 1;
        }
        let timing = if in_time {
            format!("{:.1} s", elapsed.as_secs_f64())
        } else {
            format!("{:.1} s, over the {} s budget", elapsed.as_secs_f64(), budget.as_secs())
        };
        println!(
            "[{}] {id} {title}: {} ({timing})",
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn box_2pi(n: usize) -> Grid {
    Grid::new(n, 2.0 * PI).unwrap()
}

/// Random low-mode vector field, not solenoidal, zero mean.
fn random_field(grid: &Grid, rng: &mut ChaCha8Rng, modes: usize) -> VectorField {
    let k0 = 2.0 * PI / grid.box_length();
    let terms: Vec<([f64; 3], [f64; 3], [f64; 3])> = (0..modes)
        .map(|_| {
            let k = [0, 1, 2].map(|_| k0 * rng.gen_range(-4i64..=4) as f64);
            let a = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
            let b = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
            (k, a, b)
        })
        .collect();
    let mut u = VectorField::from_fn(grid, |x, y, z| {
        let mut v = [0.0; 3];
        for (k, a, b) in &terms {
            let ph = k[0] * x + k[1] * y + k[2] * z;
            let (s, c) = ph.sin_cos();
            for i in 0..3 {
                v[i] += a[i] * c + b[i] * s;
            }
        }
        v
    });
    u.remove_mean();
    u
}

fn field_rel_diff(a: &VectorField, b: &VectorField) -> f64 {
    let d = a.axpy(-1.0, b).unwrap();
    (l2_norm_sq(&d) / l2_norm_sq(b).max(f64::MIN_POSITIVE)).sqrt()
}

fn c1_spectral() -> Outcome {
    let g = box_2pi(32);
    let mut grad_err = 0.0f64;
    for axis in 0..3 {
        for comp in 0..3 {
            for m in [1usize, 3, 7, 15] {
                let k = m as f64;
                let phase = 0.3 + axis as f64;
                let u = VectorField::from_fn(&g, |x, y, z| {
                    let mut v = [0.0; 3];
                    v[comp] = ([x, y, z][axis] * k + phase).sin();
                    v
                });
                let grad = gradient(&u);
                let mut err = 0.0f64;
                let mut scale = 0.0f64;
                let n = g.n();
                for idx in 0..g.len() {
                    let p = [g.coord(idx % n), g.coord((idx / n) % n), g.coord(idx / (n * n))];
                    for i in 0..3 {
                        for j in 0..3 {
                            let want = if i == comp && j == axis {
                                k * (p[axis] * k + phase).cos()
                            } else {
                                0.0
                            };
                            scale = scale.max(want.abs());
                            err = err.max((grad.component(3 * i + j)[idx] - want).abs());
                        }
                    }
                }
                grad_err = grad_err.max(err / scale);
            }
        }
    }

    let g16 = box_2pi(16);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (mut idem, mut adj, mut pars) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let a = random_field(&g16, &mut rng, 8);
        let b = random_field(&g16, &mut rng, 8);
        let pa = leray_project(&a);
        idem = idem.max(field_rel_diff(&leray_project(&pa), &pa));
        let lhs = inner_product(&pa, &b).unwrap();
        let rhs = inner_product(&a, &leray_project(&b)).unwrap();
        adj = adj.max((lhs - rhs).abs() / (l2_norm_sq(&a) * l2_norm_sq(&b)).sqrt());
        let real = l2_norm_sq(&a);
        pars = pars.max(rel(spectral_l2_norm_sq(&a.to_spectral()), real));
    }
    Outcome::new(
        grad_err <= 1e-12 && idem <= 1e-12 && adj <= 1e-12 && pars <= 1e-10,
        format!(
            "gradient {grad_err:.1e} (<= 1e-12), Leray idempotence {idem:.1e} and adjointness {adj:.1e} (<= 1e-12), Parseval {pars:.1e} (<= 1e-10)"
        ),
    )
}

fn c2_dissipation_oracle() -> Outcome {
    // (box, amplitude, mode, nu, C_S delta)
    let cases = [
        (2.0 * PI, 1.0, 1usize, 0.01, 0.1),
        (2.0 * PI, 0.6, 3, 0.002, 0.05),
        (1.0, 1.7, 2, 0.01, 0.02),
    ];
    let mut worst = 0.0f64;
    for (lo, a, m, nu, csd) in cases {
        let g = Grid::new(64, lo).unwrap();
        let k = 2.0 * PI * m as f64 / lo;
        let u = VectorField::from_fn(&g, |_, y, _| [a * (k * y).sin(), 0.0, 0.0]);
        // cs = 1 so that C_S delta = delta
        let p = ModelParams::new(nu, 1.0, csd, Variant::Gradient).unwrap();
        let d = dissipation_pair(&u, &p);
        let eps0 = nu * a * a * k * k / 2.0;
        let epsdelta = csd * csd * (a * k).powi(3) * 4.0 / (3.0 * PI);
        worst = worst.max(rel(d.eps0, eps0)).max(rel(d.epsdelta, epsdelta));
    }
    Outcome::new(
        worst <= 1e-3,
        format!("worst relative error {worst:.2e} over 3 shear profiles at N=64 (<= 1e-3)"),
    )
}

fn fixed_dt_residual(integ: &Integrator, u0: &VectorField, f: &VectorField, p: &ModelParams, dt: f64, steps: usize) -> f64 {
    let mut s = SimState::new(u0.clone());
    let mut series: Vec<DissipationRecord> = vec![record(&s, 0.0, f, p).unwrap()];
    for _ in 0..steps {
        s = integ.step(&s, dt).unwrap();
        series.push(record(&s, dt, f, p).unwrap());
    }
    series_balance_residual(&series)
}

fn c3_energy_equality() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = desk_config(tmp.path());
    cfg.t_end = 2.5;
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    let s = out.summary.as_ref().unwrap();
    let turnovers = cfg.t_end / s.turnover_time.unwrap_or(f64::INFINITY);
    let max_ke = s.max_ke;
    let residual = s.energy_balance_residual;

    // same initial state, fixed steps over the same horizon
    let grid = cfg.grid().unwrap();
    let p = cfg.model_params().unwrap();
    let force = make_force(ForceFamily::TaylorGreen, cfg.force_amplitude, cfg.force_mode, &grid).unwrap();
    let integ = Integrator::new(&force.f, p);
    let u0 = initial_condition(&grid, cfg.init_kind, cfg.init_amplitude, cfg.init_seed);
    // halving from the mean step the CFL controller chose
    let horizon = 2.0;
    let mean_dt = out.series.last().unwrap().t / (out.series.len() - 1) as f64;
    let n0 = (horizon / mean_dt).round() as usize;
    let r: Vec<f64> = [n0, 2 * n0, 4 * n0]
        .iter()
        .map(|&n| fixed_dt_residual(&integ, &u0, &force.f, &p, horizon / n as f64, n).abs())
        .collect();
    let (q1, q2) = (r[0] / r[1], r[1] / r[2]);
    Outcome::new(
        turnovers >= 10.0 && residual.abs() <= 1e-4 * max_ke && q1 >= 3.5,
        format!(
            "{turnovers:.1} turnovers, |residual| {:.2e} <= 1e-4 max(ke) = {:.2e}; fixed-dt residuals from dt = {:.2e}: {:.2e}, {:.2e}, {:.2e}, halving ratios {q1:.2}, {q2:.2} (>= 3.5)",
            residual.abs(),
            1e-4 * max_ke,
            horizon / n0 as f64,
            r[0],
            r[1],
            r[2]
        ),
    )
}

fn c4_stokes_decay() -> Outcome {
    let g = box_2pi(16);
    let nu = 0.05;
    let p = ModelParams::new(nu, 0.0, 0.0, Variant::Gradient).unwrap();
    let integ = Integrator::new(&VectorField::zeros(&g), p);
    // |k|^2 = 5; the mode is an exact solution: u . grad u = 0
    let u0 = VectorField::from_fn(&g, |_, y, z| [(2.0 * y + z).sin(), 0.0, 0.0]);
    let mut s = SimState::new(u0.clone());
    let dt = 0.01;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        s = integ.step(&s, dt).unwrap();
        let exact = u0.scaled((-nu * 5.0 * s.t).exp());
        worst = worst.max(field_rel_diff(&s.u, &exact));
    }
    Outcome::new(
        worst <= 1e-8,
        format!("max relative L2 error {worst:.2e} over 100 steps (<= 1e-8)"),
    )
}

fn c5_scales() -> Outcome {
    let mut worst = 0.0f64;
    let mut slack = f64::NEG_INFINITY;
    for (lo, f0) in [(2.0 * PI, 1.0), (1.0, 0.3), (5.0, 2.5)] {
        let g = Grid::new(32, lo).unwrap();
        let spec = make_force(ForceFamily::SingleModeShear, f0, 1, &g).unwrap();
        let s = spec.scales;
        worst = worst
            .max(rel(s.f_scale, f0 / 2f64.sqrt()))
            .max(rel(s.l_scale, lo / (2.0 * PI * 2f64.sqrt())));
    }
    let g = box_2pi(32);
    for family in [ForceFamily::SingleModeShear, ForceFamily::TaylorGreen, ForceFamily::AbcLike] {
        for mode in [1, 2] {
            let spec = make_force(family, 1.3, mode, &g).unwrap();
            let (f, l) = (spec.scales.f_scale, spec.scales.l_scale);
            let grad = gradient(&spec.f);
            let vol = g.volume();
            let ratios = [
                linf_norm(&grad) / (f / l),
                (l2_norm_sq(&grad) / vol) / (f / l).powi(2),
                (l3_norm_cubed(&grad) / vol) / (f / l).powi(3),
            ];
            for r in ratios {
                slack = slack.max(r - 1.0);
            }
        }
    }
    Outcome::new(
        worst <= 1e-3 && slack <= 1e-9,
        format!("F and L relative error {worst:.2e} (<= 1e-3); largest inequality excess {slack:.1e} (<= 1e-9)"),
    )
}

fn c6_theorem_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let b = BoundInputs::new(
            10f64.powf(rng.gen_range(-2.0..2.0)),
            10f64.powf(rng.gen_range(-2.0..2.0)),
            10f64.powf(rng.gen_range(-1.0..6.0)),
            rng.gen_range(0.01..1.0),
            10f64.powf(rng.gen_range(-3.0..0.0)),
        )
        .unwrap();
        worst = worst.max(rel(theorem2_rhs(2.0 / 3.0, &b).unwrap(), theorem1_rhs(&b)));
    }
    let b = BoundInputs::new(1.0, 1.0, 100.0, 0.1, 0.1).unwrap();
    let edges = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10];
    let lo: Vec<f64> = edges.iter().map(|&e| theorem2_rhs(e, &b).unwrap()).collect();
    let hi: Vec<f64> = edges.iter().map(|&e| theorem2_rhs(1.0 - e, &b).unwrap()).collect();
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let monotone = increasing(&lo) && increasing(&hi) && lo[4] > 1e9 && hi[4] > 1e9;
    Outcome::new(
        worst <= 1e-14 && monotone,
        format!(
            "max |thm2(2/3) - thm1| / thm1 = {worst:.1e} over 100 tuples (<= 1e-14); edge values grow to {:.1e} (a -> 0) and {:.1e} (a -> 1)",
            lo[4], hi[4]
        ),
    )
}

/// Desk-scale configuration: Taylor-Green forcing at mode 2, Re close to 100.
fn desk_config(dir: &std::path::Path) -> RunConfig {
    let overrides: Vec<(String, String)> = [
        ("grid.n", "32"),
        ("fluid.nu", "0.00175"),
        ("model.cs", "0.1"),
        ("force.family", "taylor_green"),
        ("force.mode", "2"),
        ("force.amplitude", "1.0"),
        ("init.kind", "random"),
        ("init.seed", "1"),
        ("time.t_end", "400"),
        ("stats.spinup", "auto"),
        ("output.gnuplot", "false"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .chain(std::iter::once(("output.dir".to_string(), dir.display().to_string())))
    .collect();
    RunConfig::load(None, &overrides).unwrap()
}

fn c7_bound(out: &Result<RunOutcome, String>, cfg: &RunConfig) -> Outcome {
    let out = match out {
        Ok(o) => o,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    let s = out.summary.as_ref().unwrap();
    let (re, turnover) = (s.re.unwrap_or(0.0), s.turnover_time.unwrap_or(f64::INFINITY));
    let spinup_turnovers = s.spinup / turnover;
    let window = s.window_turnovers.unwrap_or(0.0);
    let report = smagbox::bounds::report_from_summary(s);
    let (line, _) = verdict(&report);
    let margin = report.thm1_margin.unwrap_or(f64::NAN);
    let metric = s.eps_s.convergence_metric.max(s.usq.convergence_metric);
    let delta_ok = rel(cfg.delta, cfg.box_length / 16.0) < 1e-15;
    let pass = report.status == BoundStatus::Satisfied
        && margin > 0.0
        && metric < 0.01
        && (re - 100.0).abs() <= 10.0
        && window >= 20.0
        && spinup_turnovers >= 5.0 - 1e-9
        && delta_ok;
    Outcome::new(
        pass,
        format!(
            "Re = {re:.1}, spin-up {spinup_turnovers:.1} and window {window:.0} turnovers, <eps_S> = {:.4e} vs thm1 {:.4e} (margin {margin:.4e}), convergence metric {:.2}% (< 1%); {line}",
            s.eps_s.value,
            report.thm1_rhs.unwrap_or(f64::NAN),
            100.0 * metric
        ),
    )
}

fn c8_delta_scaling(out: &Result<RunOutcome, String>) -> Outcome {
    let u = match out {
        Ok(o) => o.state.u.clone(),
        Err(_) => initial_condition(&box_2pi(32), InitKind::Random, 1.0, 8),
    };
    let lo = u.grid().box_length();
    let base = ModelParams::new(0.01, 0.1, lo / 16.0, Variant::Gradient).unwrap();
    let ratios: Vec<f64> = [64.0, 32.0, 16.0]
        .iter()
        .map(|&d| {
            let delta = lo / d;
            dissipation_pair(&u, &base.with_delta(delta)).epsdelta / (delta * delta)
        })
        .collect();
    let spread = ratios.iter().map(|r| rel(*r, ratios[0])).fold(0.0, f64::max);
    Outcome::new(
        spread <= 1e-14 && ratios[0] > 0.0,
        format!("epsdelta / delta^2 = {:.6e}, spread {spread:.1e} over L/64, L/32, L/16 (<= 1e-14)", ratios[0]),
    )
}

fn c9_force_balance(out: &Result<RunOutcome, String>) -> Outcome {
    let out = match out {
        Ok(o) => o,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    match out.summary.as_ref().and_then(|s| s.force_balance) {
        Some(fb) => Outcome::new(
            fb.relative_residual <= 0.05,
            format!(
                "transient {:.3e} + advective {:.3e} + viscous {:.3e} + model {:.3e} = {:.4e} vs F^2 = {:.4e}, relative residual {:.2}% (<= 5%)",
                fb.transient,
                fb.advective,
                fb.viscous,
                fb.smagorinsky,
                fb.sum,
                fb.f_sq,
                100.0 * fb.relative_residual
            ),
        ),
        None => Outcome::new(false, "no force-balance samples"),
    }
}

fn c10_dissipativity() -> Outcome {
    let mut worst = 0.0f64;
    for n in [16, 32] {
        let g = box_2pi(n);
        for variant in [Variant::Gradient, Variant::Deformation] {
            for amp in [0.5, 1.0, 3.0] {
                let u = initial_condition(&g, InitKind::TaylorGreen, amp, 0);
                let p = ModelParams::new(0.01, 0.1, g.box_length() / 16.0, variant).unwrap();
                let eps = dissipation_pair(&u, &p).epsdelta;
                worst = worst.max(dissipativity_check(&u, &p).unwrap().abs() / eps);
            }
        }
    }
    let g = box_2pi(16);
    let mut monotone = true;
    let mut steps = 0;
    for variant in [Variant::Gradient, Variant::Deformation] {
        let p = ModelParams::new(0.005, 0.1, g.box_length() / 16.0, variant).unwrap();
        let integ = Integrator::new(&VectorField::zeros(&g), p);
        let mut s = SimState::new(initial_condition(&g, InitKind::Random, 1.5, 3));
        let mut ke = s.kinetic_energy();
        for _ in 0..200 {
            s = integ.step(&s, 0.02).unwrap();
            let next = s.kinetic_energy();
            monotone &= next <= ke;
            ke = next;
            steps += 1;
        }
    }
    Outcome::new(
        worst <= 1e-6 && monotone,
        format!(
            "max |(smag_term(u), u)/|Omega| + epsdelta| / epsdelta = {worst:.1e} (<= 1e-6); unforced kinetic energy non-increasing over {steps} steps: {monotone}"
        ),
    )
}

fn main() {
    let mut report = Report { failures: 0 };
    let secs = Duration::from_secs;
    report.check("C1", "spectral correctness", secs(10), c1_spectral);
    report.check("C2", "dissipation functional oracle", secs(10), c2_dissipation_oracle);
    report.check("C3", "energy equality", secs(300), c3_energy_equality);
    report.check("C4", "Stokes decay", secs(5), c4_stokes_decay);
    report.check("C5", "force scales", secs(5), c5_scales);
    report.check("C6", "theorem consistency", secs(1), c6_theorem_consistency);

    let tmp = tempfile::tempdir().unwrap();
    // the bound only needs the averages, so the long run takes larger steps
    let mut cfg = desk_config(tmp.path());
    cfg.cfl_safety = 0.5;
    let mut desk = Err("not run".to_string());
    report.check("C7", "bound at desk scale", secs(900), || {
        desk = run(&cfg).map_err(|e| e.to_string());
        c7_bound(&desk, &cfg)
    });
    report.check("C8", "delta scaling", secs(5), || c8_delta_scaling(&desk));
    report.check("C9", "force balance", secs(1), || c9_force_balance(&desk));
    report.check("C10", "model dissipativity", secs(30), c10_dissipativity);

    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
