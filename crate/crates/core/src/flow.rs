//! Normalized Ricci flow in the conformal gauge.
//!
//! With `g = e^{2u} g_round`, the flow `∂g/∂t = 2(1 − K) g` becomes the scalar
//! parabolic equation `∂u/∂t = 1 − K`. Time integration is classical RK4 under
//! a parabolic step restriction, and the total area is projected back to `4π`
//! after every step.

use std::path::PathBuf;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::{self, LatitudeGrid, MetricState};
use crate::series::{self, TimeSeriesRecord};

/// Any `|u_i|` above this aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 50.0;

/// Number of records the automatic save cadence aims for.
pub const TARGET_RECORDS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaveEvery {
    Auto,
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Round,
    /// `ε cos θ`
    Dipole { amplitude: f64 },
    /// `ε (3cos²θ − 1)/2`
    Legendre2 { amplitude: f64 },
    /// `ε (5cos³θ − 3cos θ)/2`
    Legendre3 { amplitude: f64 },
    /// Whitespace separated samples of `u`, one per grid node.
    Custom { path: PathBuf },
}

impl InitialCondition {
    pub fn name(&self) -> String {
        match self {
            InitialCondition::Round => "round".into(),
            InitialCondition::Dipole { .. } => "cos".into(),
            InitialCondition::Legendre2 { .. } => "l2".into(),
            InitialCondition::Legendre3 { .. } => "l3".into(),
            InitialCondition::Custom { path } => format!("custom:{}", path.display()),
        }
    }

    pub fn amplitude(&self) -> Option<f64> {
        match *self {
            InitialCondition::Dipole { amplitude }
            | InitialCondition::Legendre2 { amplitude }
            | InitialCondition::Legendre3 { amplitude } => Some(amplitude),
            _ => None,
        }
    }

    /// Samples the initial conformal factor, before area projection.
    pub fn sample(&self, grid: Arc<LatitudeGrid>) -> Result<MetricState> {
        match self {
            InitialCondition::Round => Ok(MetricState::round(grid)),
            InitialCondition::Dipole { amplitude } => {
                MetricState::from_fn(grid, |th| amplitude * th.cos())
            }
            InitialCondition::Legendre2 { amplitude } => MetricState::from_fn(grid, |th| {
                let x = th.cos();
                amplitude * 0.5 * (3.0 * x * x - 1.0)
            }),
            InitialCondition::Legendre3 { amplitude } => MetricState::from_fn(grid, |th| {
                let x = th.cos();
                amplitude * 0.5 * (5.0 * x * x * x - 3.0 * x)
            }),
            InitialCondition::Custom { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let mut u = Vec::with_capacity(grid.n());
                for (lineno, line) in text.lines().enumerate() {
                    let line = line.split('#').next().unwrap_or("");
                    for tok in line.split(|c: char| c.is_whitespace() || c == ',') {
                        if tok.is_empty() {
                            continue;
                        }
                        let v = tok.parse::<f64>().map_err(|_| Error::Parse {
                            line: lineno + 1,
                            msg: format!("{}: cannot parse `{tok}` as a number", path.display()),
                        })?;
                        u.push(v);
                    }
                }
                MetricState::new(grid, u, 0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub n: usize,
    pub dt: TimeStep,
    pub t_end: f64,
    pub save_every: SaveEvery,
    pub initial: InitialCondition,
    pub cfl_safety: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            n: 256,
            dt: TimeStep::Auto,
            t_end: 1.0,
            save_every: SaveEvery::Auto,
            initial: InitialCondition::Round,
            cfl_safety: 0.2,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < metric::MIN_NODES || !self.n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(self.n));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_end must be positive, got {}", self.t_end)));
        }
        if let SaveEvery::Steps(0) = self.save_every {
            return Err(Error::InvalidConfig("save_every must be at least 1".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cfl_safety must lie in (0, 1), got {}",
                self.cfl_safety
            )));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    /// Grid plus the area-projected initial state.
    pub fn initial_state(&self) -> Result<MetricState> {
        let grid = Arc::new(metric::build_grid(self.n)?);
        Ok(metric::project_area(&self.initial.sample(grid)?))
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub states: Vec<MetricState>,
    pub records: Vec<TimeSeriesRecord>,
    pub a_grid: Vec<f64>,
}

impl FlowTrajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t())
    }
}

/// Right-hand side `1 − K` of the conformal flow.
pub fn rhs(state: &MetricState) -> Vec<f64> {
    metric::gaussian_curvature(state.grid(), state.u())
        .into_iter()
        .map(|k| 1.0 - k)
        .collect()
}

/// `cfl_safety · h² · min e^{2u}`.
pub fn stable_dt(state: &MetricState, cfl_safety: f64) -> f64 {
    let h = state.grid().h();
    let min_u = state.u().iter().copied().fold(f64::INFINITY, f64::min);
    cfl_safety * h * h * (2.0 * min_u).exp()
}

fn axpy(u: &[f64], k: &[f64], a: f64) -> Vec<f64> {
    u.iter().zip(k).map(|(u, k)| u + a * k).collect()
}

fn speed(grid: &LatitudeGrid, u: &[f64]) -> Vec<f64> {
    metric::gaussian_curvature(grid, u)
        .into_iter()
        .map(|k| 1.0 - k)
        .collect()
}

/// One RK4 step followed by area projection.
pub fn step(state: &MetricState, dt: f64) -> Result<MetricState> {
    let grid = state.grid();
    let u = state.u();
    let k1 = speed(grid, u);
    let k2 = speed(grid, &axpy(u, &k1, 0.5 * dt));
    let k3 = speed(grid, &axpy(u, &k2, 0.5 * dt));
    let k4 = speed(grid, &axpy(u, &k3, dt));
    let next: Vec<f64> = (0..u.len())
        .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]))
        .collect();
    let t = state.t() + dt;
    let max_abs = next.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) });
    if max_abs > DIVERGENCE_LIMIT || !max_abs.is_finite() {
        return Err(Error::Diverged { t, max_abs });
    }
    let projected = metric::project_area(&state.with_u(next, t));
    Ok(projected)
}

/// Step size and number of steps covering `[0, t_end]`.
fn schedule(config: &FlowConfig, initial: &MetricState) -> (f64, usize) {
    match config.dt {
        TimeStep::Auto => {
            let dt0 = stable_dt(initial, config.cfl_safety);
            let steps = (config.t_end / dt0).ceil().max(1.0) as usize;
            (config.t_end / steps as f64, steps)
        }
        TimeStep::Fixed(dt) => {
            let steps = ((config.t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            (dt, steps)
        }
    }
}

/// Integrates the flow from the projected initial state and collects saved
/// states, without building records.
pub fn integrate(config: &FlowConfig) -> Result<Vec<MetricState>> {
    config.validate()?;
    let mut state = config.initial_state()?;
    let (dt, steps) = schedule(config, &state);
    let save_every = match config.save_every {
        SaveEvery::Steps(k) => k,
        SaveEvery::Auto => (steps / TARGET_RECORDS).max(1),
    };
    let mut states = vec![state.clone()];
    for k in 1..=steps {
        let h = if k == steps {
            config.t_end - (steps - 1) as f64 * dt
        } else {
            dt
        };
        state = step(&state, h)?;
        // pin times to the schedule instead of accumulating round-off
        let t = if k == steps { config.t_end } else { k as f64 * dt };
        state = state.with_u(state.u().to_vec(), t);
        if k % save_every == 0 || k == steps {
            states.push(state.clone());
        }
    }
    Ok(states)
}

/// Full run: integration plus per-record isoperimetric and bound data on
/// `a_grid`.
pub fn run(config: &FlowConfig, a_grid: &[f64]) -> Result<FlowTrajectory> {
    let states = integrate(config)?;
    let records = series::build_records(&states, a_grid)?;
    Ok(FlowTrajectory {
        states,
        records,
        a_grid: a_grid.to_vec(),
    })
}
