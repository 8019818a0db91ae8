//! Isoperimetric data along the family of latitude circles.
//!
//! For an axisymmetric metric the latitude circle whose northern cap has area
//! `A` is the natural candidate for the shortest curve enclosing `A`. Its ratio
//! against the round-sphere length `√(4πA − A²)` is the profile we record.
//! [`oracle`] searches over general closed curves as a cross-check.

pub mod oracle;

pub use oracle::{brute_force_min_length, CurveCandidate, OracleOutcome};

use serde::Serialize;

use crate::bounds::b_coefficient;
use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::metric::{self, MetricState, FOUR_PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoProfilePoint {
    pub a: f64,
    pub theta: f64,
    pub length: f64,
    pub round_length: f64,
    pub ratio_sq: f64,
    /// Geodesic distance of the circle from the north pole.
    pub r: f64,
}

fn check_area(a: f64) -> Result<()> {
    if !(a > 0.0 && a < FOUR_PI) {
        return Err(Error::domain("a", a, "(0, 4π)"));
    }
    Ok(())
}

/// Length of the shortest curve enclosing `a` on the round unit sphere.
pub fn round_length(a: f64) -> Result<f64> {
    check_area(a)?;
    Ok((a * (FOUR_PI - a)).sqrt())
}

pub fn profile_point(state: &MetricState, a: f64) -> Result<IsoProfilePoint> {
    check_area(a)?;
    let theta = metric::theta_for_area(state, a)?;
    let length = metric::cap_length(state, theta)?;
    let round = round_length(a)?;
    Ok(IsoProfilePoint {
        a,
        theta,
        length,
        round_length: round,
        ratio_sq: (length / round).powi(2),
        r: metric::meridian_distance(state, theta)?,
    })
}

pub fn latitude_profile(state: &MetricState, a_grid: &[f64]) -> Result<Vec<IsoProfilePoint>> {
    a_grid.iter().map(|&a| profile_point(state, a)).collect()
}

/// `(4πa − κa²)/(4πa − a²)`. Nonpositive once `a ≥ 4π/κ`, where the bound
/// carries no information.
pub fn cf_lower_bound(a: f64, kappa: f64) -> f64 {
    (FOUR_PI * a - kappa * a * a) / (FOUR_PI * a - a * a)
}

pub fn is_vacuous(a: f64, kappa: f64) -> bool {
    cf_lower_bound(a, kappa) <= 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfViolation {
    pub a: f64,
    pub length_sq: f64,
    pub bound: f64,
}

/// Flags profile points with `L² < 4πA − κA² − tol`.
pub fn cf_check(state: &MetricState, profile: &[IsoProfilePoint], tol: f64) -> Vec<CfViolation> {
    let kappa = metric::curvature(state).kappa;
    cf_check_with_kappa(kappa, profile, tol)
}

pub fn cf_check_with_kappa(kappa: f64, profile: &[IsoProfilePoint], tol: f64) -> Vec<CfViolation> {
    profile
        .iter()
        .filter_map(|p| {
            let length_sq = p.length * p.length;
            let bound = FOUR_PI * p.a - kappa * p.a * p.a;
            (length_sq < bound - tol).then_some(CfViolation {
                a: p.a,
                length_sq,
                bound,
            })
        })
        .collect()
}

/// Leading terms of `√(4πa − κa²)` for small `a`.
pub fn small_a_expansion(a: f64, kappa: f64) -> f64 {
    (FOUR_PI * a).sqrt() - kappa * a.powf(1.5) / (4.0 * std::f64::consts::PI.sqrt())
}

/// `ln I²` of the latitude circle at `theta`, with its meridian distance.
fn log_ratio_at_theta(state: &MetricState, theta: f64) -> Result<(f64, f64)> {
    let a = metric::cap_area(state, theta)?;
    let l = metric::cap_length(state, theta)?;
    let ratio = l * l / (a * (FOUR_PI - a));
    Ok((ratio.ln(), metric::meridian_distance(state, theta)?))
}

/// `∂²/∂r² ln I²` from the latitude circle enclosing `a` and its neighbours one
/// grid spacing away, on the nonuniform `r` they map to.
pub fn log_ratio_rr(state: &MetricState, a: f64) -> Result<f64> {
    let theta = metric::theta_for_area(state, a)?;
    let step = state
        .grid()
        .h()
        .min(0.5 * theta)
        .min(0.5 * (std::f64::consts::PI - theta));
    let (fm, rm) = log_ratio_at_theta(state, theta - step)?;
    let (f0, r0) = log_ratio_at_theta(state, theta)?;
    let (fp, rp) = log_ratio_at_theta(state, theta + step)?;
    Ok(2.0 * ((fp - f0) / (rp - r0) - (f0 - fm) / (r0 - rm)) / (rp - rm))
}

/// Residual of Hamilton's evolution equation for `ln I²` at the saved state
/// `k`, using neighbouring saved states for the time derivative. The first
/// and last states fall back to one-sided differences.
pub(crate) fn residual_at(states: &[MetricState], k: usize, a: f64) -> Result<f64> {
    let log_ratio = |s: &MetricState| -> Result<f64> { Ok(profile_point(s, a)?.ratio_sq.ln()) };
    let last = states.len() - 1;
    let dt_log = if states.len() < 2 {
        0.0
    } else if k == 0 || k == last {
        let (i, j) = if k == 0 { (0, 1) } else { (last - 1, last) };
        (log_ratio(&states[j])? - log_ratio(&states[i])?) / (states[j].t() - states[i].t())
    } else {
        let (g0, g1, g2) = (
            log_ratio(&states[k - 1])?,
            log_ratio(&states[k])?,
            log_ratio(&states[k + 1])?,
        );
        let d1 = states[k].t() - states[k - 1].t();
        let d2 = states[k + 1].t() - states[k].t();
        -d2 / (d1 * (d1 + d2)) * g0 + (d2 - d1) / (d1 * d2) * g1 + d1 / (d2 * (d1 + d2)) * g2
    };
    let state = &states[k];
    let ratio_sq = profile_point(state, a)?.ratio_sq;
    let rr = log_ratio_rr(state, a)?;
    Ok(dt_log - rr - b_coefficient(a)? * (1.0 - ratio_sq))
}

/// Residual `∂_t ln I² − ∂²_r ln I² − B(A)(1 − I²)` on the latitude family at
/// the saved time nearest `t`.
pub fn hamilton_residual(traj: &FlowTrajectory, a: f64, t: f64) -> Result<f64> {
    check_area(a)?;
    let states = &traj.states;
    let first = states.first().map(|s| s.t()).unwrap_or(0.0);
    let last = states.last().map(|s| s.t()).unwrap_or(0.0);
    if states.len() < 3 || !(t > first && t < last) {
        return Err(Error::TimeOutOfRange { t, first, last });
    }
    let k = states
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| (x.t() - t).abs().total_cmp(&(y.t() - t).abs()))
        .map(|(k, _)| k)
        .unwrap_or(1)
        .clamp(1, states.len() - 2);
    residual_at(states, k, a)
}
