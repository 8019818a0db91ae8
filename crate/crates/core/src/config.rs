//! Run manifests in the flat `key=value` format.
//!
//! ```text
//! # l2 perturbation, checked at a quarter, half and three quarters of the area
//! initial=l2 amplitude=0.05
//! t_end=3
//! a_grid=pi,2pi,3pi
//! ```
//!
//! Pairs are separated by whitespace or newlines and `#` starts a comment.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, InitialCondition, SaveEvery, TimeStep};
use crate::metric::{FOUR_PI, MIN_NODES};

pub const DEFAULT_AMPLITUDE: f64 = 0.05;
pub const AUTO_GRID_POINTS: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// `|∫K dV − 4π|`
    pub gb: f64,
    /// Slack in `L² ≥ 4πA − κA²`.
    pub cf: f64,
    /// Slack for the logistic and curvature-decay bounds.
    pub bound: f64,
    /// `|area − 4π|` after projection; fixed.
    pub area: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gb: 1e-3,
            cf: 1e-8,
            bound: crate::bounds::TOL_BOUND,
            area: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: FlowConfig,
    /// Sorted, deduplicated, inside `(0, 4π)`.
    pub a_grid: Vec<f64>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            config: FlowConfig::default(),
            a_grid: auto_a_grid(),
            tolerances: Tolerances::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunManifest {
    /// Resolves a relative custom initial-condition path against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let InitialCondition::Custom { path } = &mut self.config.initial {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// 33 equally spaced areas over `[0.1, 4π − 0.1]`.
pub fn auto_a_grid() -> Vec<f64> {
    let (lo, hi) = (0.1, FOUR_PI - 0.1);
    let n = AUTO_GRID_POINTS - 1;
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn parse_f64(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Accepts plain numbers and multiples of π written as `pi`, `2pi`, `0.5pi`.
pub fn parse_area(tok: &str) -> Option<f64> {
    let tok = tok.trim();
    match tok.strip_suffix("pi") {
        Some("") => Some(std::f64::consts::PI),
        Some(k) => parse_f64(k.trim_end_matches('*')).map(|k| k * std::f64::consts::PI),
        None => parse_f64(tok),
    }
}

pub fn parse_area_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let a = parse_area(tok).ok_or_else(|| format!("cannot parse area `{tok}`"))?;
        if !(a > 0.0 && a < FOUR_PI) {
            return Err(format!("area {a} outside (0, 4π)"));
        }
        out.push(a);
    }
    if out.is_empty() {
        return Err("a_grid is empty".into());
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

enum InitialKind {
    Round,
    Dipole,
    L2,
    L3,
    Custom(PathBuf),
}

pub fn parse_config(text: &str) -> Result<RunManifest> {
    let mut m = RunManifest::default();
    let mut kind = InitialKind::Round;
    let mut amplitude = DEFAULT_AMPLITUDE;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| Error::Parse { line, msg };
        let content = raw.split('#').next().unwrap_or("");
        for tok in content.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{tok}`")))?;
            let number = || parse_f64(value).ok_or_else(|| err(format!("{key}: cannot parse `{value}`")));
            match key {
                "n" => {
                    let n: usize = value
                        .parse()
                        .map_err(|_| err(format!("n: cannot parse `{value}`")))?;
                    if n < MIN_NODES || !n.is_multiple_of(2) {
                        return Err(err(format!("n must be even and >= {MIN_NODES}, got {n}")));
                    }
                    m.config.n = n;
                }
                "dt" => {
                    m.config.dt = if value == "auto" {
                        TimeStep::Auto
                    } else {
                        let dt = number()?;
                        if dt <= 0.0 {
                            return Err(err(format!("dt must be positive, got {dt}")));
                        }
                        TimeStep::Fixed(dt)
                    }
                }
                "t_end" => {
                    let t = number()?;
                    if t <= 0.0 {
                        return Err(err(format!("t_end must be positive, got {t}")));
                    }
                    m.config.t_end = t;
                }
                "save_every" => {
                    m.config.save_every = if value == "auto" {
                        SaveEvery::Auto
                    } else {
                        let k: usize = value
                            .parse()
                            .map_err(|_| err(format!("save_every: cannot parse `{value}`")))?;
                        if k == 0 {
                            return Err(err("save_every must be at least 1".into()));
                        }
                        SaveEvery::Steps(k)
                    }
                }
                "cfl_safety" => {
                    let s = number()?;
                    if !(s > 0.0 && s < 1.0) {
                        return Err(err(format!("cfl_safety must lie in (0, 1), got {s}")));
                    }
                    m.config.cfl_safety = s;
                }
                "initial" => {
                    kind = match value {
                        "round" => InitialKind::Round,
                        "cos" => InitialKind::Dipole,
                        "l2" => InitialKind::L2,
                        "l3" => InitialKind::L3,
                        other => match other.strip_prefix("custom:") {
                            Some(path) if !path.is_empty() => InitialKind::Custom(PathBuf::from(path)),
                            _ => {
                                return Err(err(format!(
                                    "initial must be one of round, l2, l3, cos, custom:PATH; got `{other}`"
                                )))
                            }
                        },
                    }
                }
                "amplitude" => amplitude = number()?,
                "a_grid" => {
                    m.a_grid = if value == "auto" {
                        auto_a_grid()
                    } else {
                        parse_area_list(value).map_err(err)?
                    }
                }
                "seed" => {
                    m.seed = value
                        .parse()
                        .map_err(|_| err(format!("seed: cannot parse `{value}`")))?
                }
                "output_dir" => m.output_dir = PathBuf::from(value),
                "tol_gb" | "tol_cf" | "tol_bound" => {
                    let v = number()?;
                    if v < 0.0 {
                        return Err(err(format!("{key} must be nonnegative, got {v}")));
                    }
                    match key {
                        "tol_gb" => m.tolerances.gb = v,
                        "tol_cf" => m.tolerances.cf = v,
                        _ => m.tolerances.bound = v,
                    }
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
    }

    m.config.initial = match kind {
        InitialKind::Round => InitialCondition::Round,
        InitialKind::Dipole => InitialCondition::Dipole { amplitude },
        InitialKind::L2 => InitialCondition::Legendre2 { amplitude },
        InitialKind::L3 => InitialCondition::Legendre3 { amplitude },
        InitialKind::Custom(path) => InitialCondition::Custom { path },
    };
    Ok(m)
}
