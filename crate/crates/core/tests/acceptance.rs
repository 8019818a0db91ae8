//! Acceptance battery. Runs every criterion in sequence, prints one line per
//! criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ricci_sphere::bounds::{self, b_coefficient, c_from_initial, comparison_solution, ComparisonParams};
use ricci_sphere::commands::{self, convergence_study, decay_window, fit_decay};
use ricci_sphere::config::{auto_a_grid, RunManifest};
use ricci_sphere::flow::{self, FlowConfig, FlowTrajectory, InitialCondition, SaveEvery, TimeStep};
use ricci_sphere::isoperimetric::{self, cf_lower_bound, hamilton_residual, oracle};
use ricci_sphere::metric::{self, MetricState, FOUR_PI};

const EPS: f64 = 0.05;

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Trajectories kept for the criteria that range over every run.
#[derive(Default)]
struct Runs {
    all: Vec<(String, FlowTrajectory)>,
}

impl Runs {
    fn keep(&mut self, name: &str, traj: &FlowTrajectory) {
        self.all.push((name.to_string(), traj.clone()));
    }

    fn get(&self, name: &str) -> &FlowTrajectory {
        &self.all.iter().find(|(n, _)| n == name).expect("run recorded").1
    }
}

fn config(initial: InitialCondition, n: usize, t_end: f64) -> FlowConfig {
    FlowConfig {
        n,
        t_end,
        initial,
        ..FlowConfig::default()
    }
}

fn l2() -> InitialCondition {
    InitialCondition::Legendre2 { amplitude: EPS }
}

fn three_areas() -> Vec<f64> {
    vec![PI, 2.0 * PI, 3.0 * PI]
}

fn c1_round(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let traj = flow::run(&config(InitialCondition::Round, 256, 1.0), &auto_a_grid()).unwrap();
    let elapsed = start.elapsed();
    let kappa_err = traj.records.iter().map(|r| (r.kappa - 1.0).abs()).fold(0.0, f64::max);
    let ratio_err = traj
        .records
        .iter()
        .flat_map(|r| r.per_area.iter().map(|s| (s.ratio_sq - 1.0).abs()))
        .fold(0.0, f64::max);
    runs.keep("round", &traj);
    Outcome::new(
        kappa_err <= 1e-10 && ratio_err <= 1e-6 && elapsed <= Duration::from_secs(10),
        format!(
            "max|κ−1| = {kappa_err:.2e}, max|I²−1| = {ratio_err:.2e}, {} records, {:.2} s",
            traj.records.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_area(runs: &Runs) -> Outcome {
    let mut worst = 0.0f64;
    let mut records = 0;
    for (_, traj) in &runs.all {
        for s in &traj.states {
            worst = worst.max((metric::total_area(s) - FOUR_PI).abs());
        }
        for r in &traj.records {
            worst = worst.max((r.area - FOUR_PI).abs());
        }
        records += traj.states.len();
    }
    Outcome::new(
        worst <= 1e-12,
        format!("max|area−4π| = {worst:.2e} over {records} saved states of {} runs", runs.all.len()),
    )
}

fn c3_gauss_bonnet() -> Outcome {
    let manifest = RunManifest {
        config: config(l2(), 256, 3.0),
        ..RunManifest::default()
    };
    let study = convergence_study(&manifest, &[64, 128, 256]).unwrap();
    let errs: Vec<f64> = study.rows.iter().map(|r| r.gb_error).collect();
    let orders: Vec<f64> = study.rows.iter().filter_map(|r| r.gb_order).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let pass = decreasing && orders.len() == 2 && orders.iter().all(|&p| p >= 1.8);
    Outcome::new(
        pass,
        format!("|gb−4π| = {}, observed orders {orders:.3?}", sci(&errs)),
    )
}

fn c4_chavel_feldman(runs: &Runs) -> Outcome {
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for (_, traj) in &runs.all {
        for r in &traj.records {
            for s in &r.per_area {
                // L² − (4πA − κA²)
                let slack = (s.ratio_sq - s.cf_bound) * s.a * (FOUR_PI - s.a);
                worst = worst.min(slack);
                checked += 1;
                if slack < -1e-8 {
                    violations += 1;
                }
            }
        }
    }
    let round_gap = runs
        .get("round")
        .records
        .iter()
        .flat_map(|r| r.per_area.iter().map(|s| (s.ratio_sq - s.cf_bound).abs()))
        .fold(0.0, f64::max);
    Outcome::new(
        violations == 0 && round_gap <= 1e-6,
        format!(
            "{violations} violations in {checked} checks (worst slack {worst:.2e}); round equality gap {round_gap:.2e}"
        ),
    )
}

fn c5_tightness() -> Outcome {
    let state = config(l2(), 4096, 1.0).initial_state().unwrap();
    let field = metric::curvature(&state);
    let n = state.grid().n();
    let argmax = field
        .k
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap();
    let at_pole = argmax == 0 || argmax == n - 1;
    let devs: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&a| {
            let p = isoperimetric::profile_point(&state, a).unwrap();
            (p.ratio_sq / cf_lower_bound(a, field.kappa) - 1.0).abs()
        })
        .collect();
    let monotone = devs.windows(2).all(|w| w[1] < w[0]);
    Outcome::new(
        at_pole && monotone,
        format!("n = {n}, κ max at node {argmax}; deviations at a = 1e-1, 1e-2, 1e-3: {}", sci(&devs)),
    )
}

fn c6_sigmoid(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let traj = flow::run(&config(l2(), 256, 3.0), &three_areas()).unwrap();
    let elapsed = start.elapsed();
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for (j, &a) in traj.a_grid.iter().enumerate() {
        let params = ComparisonParams::new(a, c_from_initial(traj.records[0].per_area[j].ratio_sq).unwrap()).unwrap();
        let mut here = 0;
        for r in &traj.records {
            let margin = r.per_area[j].ratio_sq - comparison_solution(&params, r.t);
            worst = worst.min(margin);
            if margin < -1e-4 {
                here += 1;
            }
        }
        assert_eq!(bounds::sigmoid_bound_check(&traj, a, 1e-4).unwrap().violations.len(), here);
        violations += here;
    }
    runs.keep("l2", &traj);
    Outcome::new(
        violations == 0 && elapsed <= Duration::from_secs(60),
        format!(
            "{violations} violations over {} records × 3 areas (worst margin {worst:.2e}), {:.2} s",
            traj.records.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c7_decay(runs: &mut Runs) -> Outcome {
    let l2 = runs.get("l2").clone();
    let report = bounds::kappa_decay_check(&l2, 1e-4).unwrap();
    let samples: Vec<(f64, f64)> = l2.records.iter().map(|r| (r.t, r.kappa)).collect();
    let fit = fit_decay(&samples, decay_window(3.0)).unwrap();
    let l3 = flow::run(
        &config(InitialCondition::Legendre3 { amplitude: EPS }, 256, 1.5),
        &three_areas(),
    )
    .unwrap();
    let report3 = bounds::kappa_decay_check(&l3, 1e-4).unwrap();
    let rate_ok = (3.6..=4.4).contains(&fit.rate);
    runs.keep("l3", &l3);
    Outcome::new(
        report.passed() && report3.passed() && rate_ok,
        format!(
            "ℓ=2: {} violations, rate {:.4} on [{}, {}]; ℓ=3: {} violations",
            report.violations.len(),
            fit.rate,
            fit.window[0],
            fit.window[1],
            report3.violations.len()
        ),
    )
}

fn c8_b_coefficient() -> Outcome {
    let n = 10_000;
    let min = (0..n)
        .map(|i| b_coefficient(FOUR_PI * (i as f64 + 0.5) / n as f64).unwrap())
        .fold(f64::INFINITY, f64::min);
    let at_half = b_coefficient(2.0 * PI).unwrap();
    Outcome::new(
        min >= 2.0 && (at_half - 2.0).abs() <= 1e-12,
        format!("min over {n} areas = {min:.15}, B(2π) = {at_half:.15}"),
    )
}

fn residual_run(n: usize, dt: f64, save_every: usize) -> FlowTrajectory {
    let cfg = FlowConfig {
        n,
        dt: TimeStep::Fixed(dt),
        t_end: 1.5,
        save_every: SaveEvery::Steps(save_every),
        initial: l2(),
        ..FlowConfig::default()
    };
    flow::run(&cfg, &[2.0 * PI]).unwrap()
}

fn c9_hamilton(runs: &mut Runs) -> Outcome {
    let round = runs.get("round");
    let round_worst = round
        .records
        .iter()
        .flat_map(|r| r.per_area.iter().map(|s| s.residual.abs()))
        .fold(0.0, f64::max);
    let mut residuals = Vec::new();
    for (n, dt, save) in [(64, 4e-4, 50), (128, 1e-4, 100), (256, 2.5e-5, 200)] {
        let traj = residual_run(n, dt, save);
        residuals.push(hamilton_residual(&traj, 2.0 * PI, 1.0).unwrap().abs());
        runs.keep(&format!("residual-{n}"), &traj);
    }
    let shrinks = residuals.windows(2).all(|w| w[0] >= 2.0 * w[1]);
    Outcome::new(
        round_worst <= 1e-6 && shrinks,
        format!("round max |residual| = {round_worst:.2e}; ℓ=2 at (2π, 1) for n = 64, 128, 256: {}", sci(&residuals)),
    )
}

fn c10_oracle() -> Outcome {
    let start = Instant::now();
    let grid = Arc::new(metric::build_grid(256).unwrap());
    let round = MetricState::round(grid);
    let perturbed = config(l2(), 256, 1.0).initial_state().unwrap();
    let mut ratios = Vec::new();
    for state in [&round, &perturbed] {
        for a in [PI, 2.0 * PI] {
            ratios.push(oracle::search(state, a, 64, 200, 0).unwrap().ratio());
        }
    }
    let elapsed = start.elapsed();
    let pass = ratios.iter().all(|r| (commands::ORACLE_RATIO..=1.0).contains(r))
        && elapsed <= Duration::from_secs(120);
    Outcome::new(
        pass,
        format!(
            "ratios (round π, round 2π, ℓ=2 π, ℓ=2 2π) = {ratios:.6?}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c11_determinism() -> Outcome {
    let manifest = RunManifest {
        config: config(l2(), 128, 1.0),
        a_grid: three_areas(),
        seed: 7,
        ..RunManifest::default()
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let bytes: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            commands::simulate(&manifest, d.path()).unwrap();
            std::fs::read(d.path().join("series.csv")).unwrap()
        })
        .collect();
    Outcome::new(
        bytes[0] == bytes[1],
        format!("series.csv sizes {} and {} bytes", bytes[0].len(), bytes[1].len()),
    )
}

fn main() -> ExitCode {
    let mut runs = Runs::default();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |id, name, o: Outcome| {
        println!("acceptance {id:>2} {name:<22} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };

    let o = c1_round(&mut runs);
    record(1, "round fixed point", o);
    record(3, "gauss-bonnet order", c3_gauss_bonnet());
    record(5, "tightness a→0", c5_tightness());
    let o = c6_sigmoid(&mut runs);
    record(6, "sigmoid bound", o);
    let o = c7_decay(&mut runs);
    record(7, "curvature decay", o);
    record(8, "B coefficient", c8_b_coefficient());
    let o = c9_hamilton(&mut runs);
    record(9, "hamilton residual", o);
    record(10, "oracle sanity", c10_oracle());
    record(11, "determinism", c11_determinism());
    record(2, "area normalization", c2_area(&runs));
    record(4, "chavel-feldman", c4_chavel_feldman(&runs));

    results.sort_by_key(|r| r.0);
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {failed:?}");
        ExitCode::FAILURE
    }
}
