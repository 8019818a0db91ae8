//! Logistic comparison bound for the isoperimetric ratio and the exponential
//! decay bound for the curvature maximum, checked against trajectories.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::metric::FOUR_PI;

/// Default slack for trajectory-level inequality checks.
pub const TOL_BOUND: f64 = 1e-4;

/// `κ(0)` at or below `1 + ROUND_KAPPA_TOL` is treated as round.
pub const ROUND_KAPPA_TOL: f64 = 1e-8;

/// `B(A) = (A² + (4π − A)²) / (A (4π − A))`.
pub fn b_coefficient(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < FOUR_PI) {
        return Err(Error::domain("a", a, "(0, 4π)"));
    }
    let c = FOUR_PI - a;
    Ok((a * a + c * c) / (a * c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonParams {
    pub a: f64,
    pub b: f64,
    /// `+∞` encodes the constant solution `f ≡ 1`.
    pub c: f64,
}

impl ComparisonParams {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        Ok(Self {
            a,
            b: b_coefficient(a)?,
            c,
        })
    }
}

/// `f(t) = 1 / (1 + e^{−Bt−C})`, the solution of `d/dt ln f = B (1 − f)`.
pub fn comparison_solution(params: &ComparisonParams, t: f64) -> f64 {
    if params.c == f64::INFINITY {
        return 1.0;
    }
    1.0 / (1.0 + (-params.b * t - params.c).exp())
}

/// Offset `C` that makes `f(0)` equal to the measured `I²(0)`.
pub fn c_from_initial(i_sq_0: f64) -> Result<f64> {
    if !(i_sq_0 > 0.0 && i_sq_0 <= 1.0) {
        return Err(Error::domain("I²(0)", i_sq_0, "(0, 1]"));
    }
    if i_sq_0 == 1.0 {
        return Ok(f64::INFINITY);
    }
    // e^{−C} = 1/I² − 1
    Ok(-((1.0 - i_sq_0) / i_sq_0).ln())
}

/// Offset `C` from `e^{−C} = (κ₀ − 1) A² / (4πA − κ₀A²)`.
pub fn c_from_kappa(a: f64, kappa0: f64) -> Result<f64> {
    if !(kappa0 > 1.0) {
        return Err(Error::domain("kappa0", kappa0, "(1, ∞)"));
    }
    if !(a > 0.0 && a < FOUR_PI / kappa0) {
        return Err(Error::domain("a", a, format!("(0, 4π/κ₀ = {})", FOUR_PI / kappa0)));
    }
    let e_minus_c = (kappa0 - 1.0) * a / (FOUR_PI - kappa0 * a);
    Ok(-e_minus_c.ln())
}

/// Signed slack `e^{−BT} (4πA − κ_T A²)/(4πA − κ₀A²) − (κ_T − 1)/(κ₀ − 1)`.
pub fn contradiction_inequality(a: f64, t_cap: f64, kappa0: f64, kappa_t: f64) -> Result<f64> {
    if !(kappa0 > 1.0) {
        return Err(Error::domain("kappa0", kappa0, "(1, ∞)"));
    }
    let limit = FOUR_PI / kappa0.max(kappa_t);
    if !(a > 0.0 && a < limit) {
        return Err(Error::domain("a", a, format!("(0, {limit})")));
    }
    let b = b_coefficient(a)?;
    Ok((-b * t_cap).exp() * (FOUR_PI - kappa_t * a) / (FOUR_PI - kappa0 * a)
        - (kappa_t - 1.0) / (kappa0 - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Sigmoid,
    KappaDecay,
    Contradiction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// Sorted by time.
    pub violations: Vec<Violation>,
    /// Smallest signed margin over all checked times; negative when the bound
    /// fails before slack is applied.
    pub worst_margin: f64,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn area_index(traj: &FlowTrajectory, a: f64) -> Result<usize> {
    traj.a_grid
        .iter()
        .position(|&x| (x - a).abs() <= 1e-12 * a.abs().max(1.0))
        .ok_or(Error::MissingArea(a))
}

/// Checks `I²(t) ≥ 1/(1 + e^{−Bt−C}) − tol` at every record, with `C` fixed by
/// the recorded `I²(0)`.
pub fn sigmoid_bound_check(traj: &FlowTrajectory, a: f64, tol: f64) -> Result<BoundReport> {
    let idx = area_index(traj, a)?;
    let first = traj
        .records
        .first()
        .ok_or_else(|| Error::Vacuous("trajectory has no records".into()))?;
    let params = ComparisonParams::new(a, crate::series::initial_offset(first.per_area[idx].ratio_sq)?)?;
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    for rec in &traj.records {
        let measured = rec.per_area[idx].ratio_sq;
        let bound = comparison_solution(&params, rec.t);
        worst = worst.min(measured - bound);
        if measured < bound - tol {
            violations.push(Violation { t: rec.t, measured, bound });
        }
    }
    Ok(BoundReport {
        kind: BoundKind::Sigmoid,
        violations,
        worst_margin: worst,
    })
}

/// Checks `κ(t) − 1 ≤ (κ(0) − 1) e^{−2t} (1 + tol)` on `(t, κ)` samples.
pub fn kappa_decay_series(series: &[(f64, f64)], tol: f64) -> Result<BoundReport> {
    let &(_, kappa0) = series
        .first()
        .ok_or_else(|| Error::Vacuous("empty κ series".into()))?;
    if kappa0 <= 1.0 + ROUND_KAPPA_TOL {
        return Err(Error::Vacuous(format!(
            "κ(0) = {kappa0} is round; the decay bound is vacuous"
        )));
    }
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    for &(t, kappa) in series {
        let decay = (kappa0 - 1.0) * (-2.0 * t).exp();
        let measured = kappa - 1.0;
        worst = worst.min(decay - measured);
        if measured > decay * (1.0 + tol) {
            violations.push(Violation { t, measured, bound: decay });
        }
    }
    Ok(BoundReport {
        kind: BoundKind::KappaDecay,
        violations,
        worst_margin: worst,
    })
}

pub fn kappa_decay_check(traj: &FlowTrajectory, tol: f64) -> Result<BoundReport> {
    let series: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, r.kappa)).collect();
    kappa_decay_series(&series, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn b_values() {
        assert_relative_eq!(b_coefficient(2.0 * PI).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(b_coefficient(PI).unwrap(), 10.0 / 3.0, epsilon = 1e-14);
        for a in [0.01, 1.3, 5.5] {
            assert_relative_eq!(
                b_coefficient(a).unwrap(),
                b_coefficient(FOUR_PI - a).unwrap(),
                max_relative = 1e-13
            );
        }
        assert!(b_coefficient(0.0).is_err());
        assert!(b_coefficient(FOUR_PI).is_err());
    }

    #[test]
    fn comparison_solution_values() {
        let p = ComparisonParams::new(PI, 0.0).unwrap();
        assert_eq!(comparison_solution(&p, 0.0), 0.5);
        assert_relative_eq!(comparison_solution(&p, 50.0), 1.0, epsilon = 1e-15);
        let round = ComparisonParams::new(PI, f64::INFINITY).unwrap();
        assert_eq!(comparison_solution(&round, 0.3), 1.0);
    }

    #[test]
    fn comparison_solution_solves_logistic_ode() {
        let p = ComparisonParams::new(2.0, -0.7).unwrap();
        let h = 1e-5;
        let lnf = |t: f64| comparison_solution(&p, t).ln();
        let deriv = (lnf(1.0 + h) - lnf(1.0 - h)) / (2.0 * h);
        let f = comparison_solution(&p, 1.0);
        assert!((deriv - p.b * (1.0 - f)).abs() <= 1e-6);
    }

    #[test]
    fn c_from_initial_values() {
        assert_eq!(c_from_initial(0.5).unwrap(), 0.0);
        assert_relative_eq!(c_from_initial(2.0 / 3.0).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(c_from_initial(1.0).unwrap(), f64::INFINITY);
        assert!(c_from_initial(0.0).is_err());
        assert!(c_from_initial(1.0 + 1e-12).is_err());
        let p = ComparisonParams::new(3.0, c_from_initial(0.83).unwrap()).unwrap();
        assert!((comparison_solution(&p, 0.0) - 0.83).abs() <= 1e-12);
    }

    #[test]
    fn c_from_kappa_values() {
        assert_relative_eq!(c_from_kappa(PI, 2.0).unwrap(), 2f64.ln(), epsilon = 1e-14);
        assert!(c_from_kappa(2.0 * PI, 2.0).is_err());
        assert!(c_from_kappa(1.0, 1.0).is_err());
        assert!(c_from_kappa(1.0, 1.0 + 1e-12).unwrap() > 25.0);
    }

    #[test]
    fn contradiction_identity_case() {
        assert_eq!(contradiction_inequality(1.0, 0.0, 1.5, 1.5).unwrap(), 0.0);
        assert!(contradiction_inequality(3.0, 1.0, 5.0, 1.2).is_err());
        assert!(contradiction_inequality(1.0, 1.0, 1.0, 1.2).is_err());
    }

    #[test]
    fn kappa_decay_negative_control() {
        let k0 = 1.2;
        let slow: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let t = 0.1 * i as f64;
                (t, 1.0 + (k0 - 1.0) * (-t).exp())
            })
            .collect();
        let r = kappa_decay_series(&slow, TOL_BOUND).unwrap();
        assert!(!r.passed());
        assert!(r.violations.iter().all(|v| v.t > 0.0));
        assert!(r.violations.windows(2).all(|w| w[0].t < w[1].t));
        let fast: Vec<(f64, f64)> = slow
            .iter()
            .map(|&(t, _)| (t, 1.0 + (k0 - 1.0) * (-4.0 * t).exp()))
            .collect();
        assert!(kappa_decay_series(&fast, TOL_BOUND).unwrap().passed());
        assert!(kappa_decay_series(&[(0.0, 1.0)], TOL_BOUND).is_err());
    }
}
