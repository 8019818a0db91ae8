//! `simulate`, `convergence` and `oracle`: file outputs and exit codes.
//!
//! Exit codes: 0 when every check passes, 1 on a bound violation (or an order
//! or oracle gate failure), 2 when the flow diverges.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::bounds::{self, BoundReport};
use crate::config::{RunManifest, Tolerances};
use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, FlowTrajectory, TimeStep};
use crate::isoperimetric::{self, oracle};
use crate::metric::{self, FOUR_PI};
use crate::series;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

/// Observed order gate for grid refinement.
pub const MIN_ORDER: f64 = 1.8;
/// Oracle gate: the search may not beat the latitude circle by more than 2%.
pub const ORACLE_RATIO: f64 = 0.98;
/// `κ − 1` below this is treated as round-off and left out of the decay fit.
pub const DECAY_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub pass: bool,
    pub worst_margin: f64,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckSummary {
    fn from_margins(margins: impl IntoIterator<Item = f64>, tol: f64) -> Self {
        let mut worst = f64::INFINITY;
        let mut violations = 0;
        for m in margins {
            worst = worst.min(m);
            if m < -tol {
                violations += 1;
            }
        }
        Self {
            pass: violations == 0,
            worst_margin: worst,
            violations,
            note: None,
        }
    }

    fn from_report(r: &BoundReport) -> Self {
        Self {
            pass: r.passed(),
            worst_margin: r.worst_margin,
            violations: r.violations.len(),
            note: None,
        }
    }

    fn skipped(note: impl Into<String>) -> Self {
        Self {
            pass: true,
            worst_margin: f64::INFINITY,
            violations: 0,
            note: Some(note.into()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmoidSummary {
    pub a: f64,
    #[serde(flatten)]
    pub check: CheckSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Checks {
    pub area: CheckSummary,
    pub gauss_bonnet: CheckSummary,
    pub chavel_feldman: CheckSummary,
    pub sigmoid: CheckSummary,
    pub sigmoid_per_area: Vec<SigmoidSummary>,
    pub kappa_decay: CheckSummary,
}

impl Checks {
    pub fn all_pass(&self) -> bool {
        [
            &self.area,
            &self.gauss_bonnet,
            &self.chavel_feldman,
            &self.sigmoid,
            &self.kappa_decay,
        ]
        .iter()
        .all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// `−d/dt ln(κ − 1)` from a least-squares line.
    pub rate: f64,
    pub window: [f64; 2],
    pub r_squared: f64,
    pub points: usize,
}

/// Default fit window: `[1, 3]`, shrunk proportionally for shorter runs.
pub fn decay_window(t_end: f64) -> [f64; 2] {
    if t_end >= 3.0 {
        [1.0, 3.0]
    } else {
        [t_end / 3.0, t_end]
    }
}

pub fn fit_decay(samples: &[(f64, f64)], window: [f64; 2]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, k)| *t >= window[0] - 1e-12 && *t <= window[1] + 1e-12 && k - 1.0 > DECAY_FLOOR)
        .map(|&(t, k)| (t, (k - 1.0).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(DecayFit {
        rate: -slope,
        window,
        r_squared,
        points: pts.len(),
    })
}

/// Runs every check on a finished trajectory.
pub fn evaluate_checks(traj: &FlowTrajectory, tol: &Tolerances) -> Result<Checks> {
    let recs = &traj.records;
    let area = CheckSummary::from_margins(recs.iter().map(|r| tol.area - (r.area - FOUR_PI).abs()), 0.0);
    let gb0 = recs.first().map(|r| (r.gauss_bonnet - FOUR_PI).abs()).unwrap_or(0.0);
    let mut gauss_bonnet =
        CheckSummary::from_margins(recs.iter().map(|r| tol.gb - (r.gauss_bonnet - FOUR_PI).abs()), 0.0);
    let drift = recs
        .iter()
        .map(|r| (r.gauss_bonnet - FOUR_PI).abs())
        .fold(0.0, f64::max);
    if drift > 2.0 * gb0 + 1e-12 {
        gauss_bonnet.note = Some(format!(
            "Gauss-Bonnet error grew from {gb0:e} to {drift:e} along the flow"
        ));
    }
    let chavel_feldman = CheckSummary::from_margins(
        recs.iter().flat_map(|r| {
            r.per_area
                .iter()
                .map(|s| (s.ratio_sq - s.cf_bound) * (FOUR_PI * s.a - s.a * s.a))
        }),
        tol.cf,
    );

    let mut per_area = Vec::new();
    for &a in &traj.a_grid {
        let report = bounds::sigmoid_bound_check(traj, a, tol.bound)?;
        per_area.push(SigmoidSummary {
            a,
            check: CheckSummary::from_report(&report),
        });
    }
    let sigmoid = CheckSummary {
        pass: per_area.iter().all(|s| s.check.pass),
        worst_margin: per_area
            .iter()
            .map(|s| s.check.worst_margin)
            .fold(f64::INFINITY, f64::min),
        violations: per_area.iter().map(|s| s.check.violations).sum(),
        note: None,
    };

    let kappa_decay = match bounds::kappa_decay_check(traj, tol.bound) {
        Ok(r) => CheckSummary::from_report(&r),
        Err(Error::Vacuous(msg)) => CheckSummary::skipped(msg),
        Err(e) => return Err(e),
    };
    Ok(Checks {
        area,
        gauss_bonnet,
        chavel_feldman,
        sigmoid,
        sigmoid_per_area: per_area,
        kappa_decay,
    })
}

fn config_echo(m: &RunManifest) -> serde_json::Value {
    let c = &m.config;
    json!({
        "n": c.n,
        "dt": match c.dt { TimeStep::Auto => json!("auto"), TimeStep::Fixed(dt) => json!(dt) },
        "t_end": c.t_end,
        "save_every": match c.save_every {
            flow::SaveEvery::Auto => json!("auto"),
            flow::SaveEvery::Steps(k) => json!(k),
        },
        "cfl_safety": c.cfl_safety,
        "initial": c.initial.name(),
        "amplitude": c.initial.amplitude(),
        "a_grid": m.a_grid,
        "seed": m.seed,
    })
}

fn versions() -> serde_json::Value {
    json!({ env!("CARGO_PKG_NAME"): env!("CARGO_PKG_VERSION"), "summary_format": 1 })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_series(path: &Path, traj: &FlowTrajectory) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    series::write_csv(BufWriter::new(file), &traj.a_grid, &traj.records).map_err(|e| Error::io(path, e))
}

/// Outcome of `simulate`, for callers that want more than the exit code.
#[derive(Debug)]
pub struct SimulateOutcome {
    pub exit_code: i32,
    pub checks: Option<Checks>,
    pub decay_fit: Option<DecayFit>,
    pub trajectory: Option<FlowTrajectory>,
}

pub fn simulate(manifest: &RunManifest, out: &Path) -> Result<SimulateOutcome> {
    ensure_dir(out)?;
    let summary_path = out.join("summary.json");
    let traj = match flow::run(&manifest.config, &manifest.a_grid) {
        Ok(t) => t,
        Err(Error::Diverged { t, max_abs }) => {
            write_json(
                &summary_path,
                &json!({
                    "checks": null,
                    "diverged": { "t": t, "max_abs_u": max_abs },
                    "config": config_echo(manifest),
                    "tolerances": manifest.tolerances,
                    "versions": versions(),
                }),
            )?;
            eprintln!("flow diverged at t = {t} (max |u| = {max_abs})");
            return Ok(SimulateOutcome {
                exit_code: EXIT_DIVERGED,
                checks: None,
                decay_fit: None,
                trajectory: None,
            });
        }
        Err(e) => return Err(e),
    };
    write_series(&out.join("series.csv"), &traj)?;
    let checks = evaluate_checks(&traj, &manifest.tolerances)?;
    let samples: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, r.kappa)).collect();
    let window = decay_window(manifest.config.t_end);
    let fit = fit_decay(&samples, window);
    let summary = json!({
        "pass": checks.all_pass(),
        "checks": serde_json::to_value(&checks).expect("checks serialize"),
        "decay_fit": fit.map(|f| serde_json::to_value(f).expect("fit serializes"))
            .unwrap_or_else(|| json!({ "rate": null, "window": window, "note": "fewer than 3 samples above the round-off floor" })),
        "config": config_echo(manifest),
        "tolerances": manifest.tolerances,
        "versions": versions(),
    });
    // non-finite margins (skipped checks) serialize as null
    write_json(&summary_path, &summary)?;
    let exit_code = if checks.all_pass() { EXIT_PASS } else { EXIT_VIOLATION };
    Ok(SimulateOutcome {
        exit_code,
        checks: Some(checks),
        decay_fit: fit,
        trajectory: Some(traj),
    })
}

pub fn simulate_command(manifest: &RunManifest, out: Option<&Path>) -> Result<i32> {
    let dir = out.map(PathBuf::from).unwrap_or_else(|| manifest.output_dir.clone());
    let outcome = simulate(manifest, &dir)?;
    if let Some(checks) = &outcome.checks {
        println!("area            {}", verdict(&checks.area));
        println!("gauss_bonnet    {}", verdict(&checks.gauss_bonnet));
        println!("chavel_feldman  {}", verdict(&checks.chavel_feldman));
        println!("sigmoid         {}", verdict(&checks.sigmoid));
        println!("kappa_decay     {}", verdict(&checks.kappa_decay));
    }
    if let Some(fit) = outcome.decay_fit {
        println!(
            "decay rate {:.4} on [{}, {}] (r² = {:.6})",
            fit.rate, fit.window[0], fit.window[1], fit.r_squared
        );
    }
    println!("wrote {}", dir.display());
    Ok(outcome.exit_code)
}

fn verdict(c: &CheckSummary) -> String {
    let state = if c.note.is_some() && c.violations == 0 && c.worst_margin.is_infinite() {
        "SKIP"
    } else if c.pass {
        "PASS"
    } else {
        "FAIL"
    };
    format!("{state} worst margin {:e} ({} violations)", c.worst_margin, c.violations)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub kappa_t_end: f64,
    pub gb_error: f64,
    pub kappa_order: Option<f64>,
    pub gb_order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub kappa_order: Option<f64>,
    pub gb_order: Option<f64>,
    pub notes: Vec<String>,
}

impl ConvergenceStudy {
    pub fn passed(&self) -> bool {
        self.kappa_order.is_none_or(|p| p >= MIN_ORDER) && self.gb_order.is_none_or(|p| p >= MIN_ORDER)
    }
}

/// Differences below this are round-off.
const ORDER_FLOOR: f64 = 1e-13;

pub fn convergence_study(manifest: &RunManifest, grids: &[usize]) -> Result<ConvergenceStudy> {
    if grids.len() < 2 {
        return Err(Error::InvalidConfig("convergence needs at least two grids".into()));
    }
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!(
            "grids must be strictly increasing, got {grids:?}"
        )));
    }
    for &n in grids {
        metric::build_grid(n)?;
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in grids {
        let config = FlowConfig {
            n,
            dt: TimeStep::Auto,
            ..manifest.config.clone()
        };
        let states = flow::integrate(&config)?;
        let gb_error = states
            .iter()
            .map(|s| (metric::curvature(s).gb - FOUR_PI).abs())
            .fold(0.0, f64::max);
        let kappa = metric::curvature(states.last().expect("at least the initial state")).kappa;
        rows.push(ConvergenceRow {
            n,
            h: std::f64::consts::PI / n as f64,
            kappa_t_end: kappa,
            gb_error,
            kappa_order: None,
            gb_order: None,
        });
    }
    let mut notes = Vec::new();
    let gb_degenerate = rows.iter().all(|r| r.gb_error < ORDER_FLOOR);
    for i in 1..rows.len() {
        let ratio = rows[i].n as f64 / rows[i - 1].n as f64;
        if !gb_degenerate {
            rows[i].gb_order = Some((rows[i - 1].gb_error / rows[i].gb_error).ln() / ratio.ln());
        }
        if i >= 2 {
            let d1 = (rows[i - 1].kappa_t_end - rows[i - 2].kappa_t_end).abs();
            let d2 = (rows[i].kappa_t_end - rows[i - 1].kappa_t_end).abs();
            if d1 > ORDER_FLOOR && d2 > ORDER_FLOOR {
                let r1 = rows[i - 1].n as f64 / rows[i - 2].n as f64;
                // exact for equal ratios; geometric mean otherwise
                let r = (r1 * ratio).sqrt();
                rows[i].kappa_order = Some((d1 / d2).ln() / r.ln());
            }
        }
    }
    let kappa_order = rows.last().and_then(|r| r.kappa_order);
    let gb_order = rows.last().and_then(|r| r.gb_order);
    if gb_degenerate {
        notes.push("Gauss-Bonnet errors at the round-off floor; order check skipped".into());
    }
    if kappa_order.is_none() {
        notes.push(if rows.len() < 3 {
            "kappa order needs at least three grids; check skipped".into()
        } else {
            "kappa differences at the round-off floor; order check skipped".into()
        });
    }
    Ok(ConvergenceStudy {
        rows,
        kappa_order,
        gb_order,
        notes,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn convergence_command(manifest: &RunManifest, grids: &[usize], out: Option<&Path>) -> Result<i32> {
    let dir = out.map(PathBuf::from).unwrap_or_else(|| manifest.output_dir.clone());
    let study = match convergence_study(manifest, grids) {
        Ok(s) => s,
        Err(Error::Diverged { t, max_abs }) => {
            eprintln!("flow diverged at t = {t} (max |u| = {max_abs})");
            return Ok(EXIT_DIVERGED);
        }
        Err(e) => return Err(e),
    };
    ensure_dir(&dir)?;
    let path = dir.join("convergence.csv");
    let mut text = String::from("n,h,kappa_t_end,gb_error,kappa_order,gb_order\n");
    for r in &study.rows {
        text.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{},{}\n",
            r.n,
            r.h,
            r.kappa_t_end,
            r.gb_error,
            opt(r.kappa_order),
            opt(r.gb_order)
        ));
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    for r in &study.rows {
        println!(
            "n={:<5} kappa(t_end)={:.12} gb_error={:.3e} kappa_order={} gb_order={}",
            r.n,
            r.kappa_t_end,
            r.gb_error,
            r.kappa_order.map_or("-".into(), |p| format!("{p:.3}")),
            r.gb_order.map_or("-".into(), |p| format!("{p:.3}")),
        );
    }
    for note in &study.notes {
        println!("note: {note}");
    }
    println!("wrote {}", path.display());
    Ok(if study.passed() { EXIT_PASS } else { EXIT_VIOLATION })
}

/// State at time `t` of the manifest's flow (the projected initial state for
/// `t = 0`).
pub fn state_at(manifest: &RunManifest, t: f64) -> Result<metric::MetricState> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("t", t, "[0, ∞)"));
    }
    if t == 0.0 {
        return manifest.config.initial_state();
    }
    let config = FlowConfig {
        t_end: t,
        ..manifest.config.clone()
    };
    Ok(flow::integrate(&config)?.pop().expect("final state"))
}

pub fn oracle_command(
    manifest: &RunManifest,
    a: f64,
    t: f64,
    resolution: usize,
    trials: usize,
) -> Result<i32> {
    let state = match state_at(manifest, t) {
        Ok(s) => s,
        Err(Error::Diverged { t, max_abs }) => {
            eprintln!("flow diverged at t = {t} (max |u| = {max_abs})");
            return Ok(EXIT_DIVERGED);
        }
        Err(e) => return Err(e),
    };
    let out = isoperimetric::oracle::search(&state, a, resolution, trials, manifest.seed)?;
    let ratio = out.ratio();
    println!("a                {a}");
    println!("t                {}", state.t());
    println!("latitude length  {:.12}", out.latitude_length);
    println!("oracle length    {:.12}", out.best_length);
    println!("ratio            {ratio:.6}");
    println!(
        "best center      theta={:.6} phi={:.6}",
        out.candidate.center.0, out.candidate.center.1
    );
    Ok(if ratio >= ORACLE_RATIO { EXIT_PASS } else { EXIT_VIOLATION })
}

pub use oracle::OracleOutcome;
