//! Axisymmetric conformal metrics `g = e^{2u(θ)} g_round` on the two-sphere.
//!
//! The conformal factor is sampled on a cell-centered colatitude grid that
//! excludes both poles. Curvature uses centered second differences of the
//! axisymmetric Laplacian with mirrored ghost values at the poles. Areas use a
//! product midpoint rule: `e^{2u}` is held at its cell-center value while the
//! round area form `sin θ dθ` is integrated exactly over each cell, so the
//! discrete round sphere has total area exactly `4π`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const FOUR_PI: f64 = 4.0 * PI;

/// Smallest admissible grid.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct LatitudeGrid {
    n: usize,
    h: f64,
    theta: Vec<f64>,
    sin_theta: Vec<f64>,
    cot_theta: Vec<f64>,
    /// Round-sphere area of each cell, `2π (cos θ_{i-1/2} − cos θ_{i+1/2})`.
    cell_area: Vec<f64>,
}

impl LatitudeGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        let h = PI / n as f64;
        // southern half mirrored so the grid is exactly symmetric about π/2
        let north: Vec<f64> = (0..n / 2).map(|i| (i as f64 + 0.5) * h).collect();
        let theta: Vec<f64> = north
            .iter()
            .copied()
            .chain(north.iter().rev().map(|t| PI - t))
            .collect();
        let sin_north: Vec<f64> = north.iter().map(|t| t.sin()).collect();
        let cot_north: Vec<f64> = north.iter().map(|t| t.cos() / t.sin()).collect();
        let sin_theta: Vec<f64> = sin_north.iter().chain(sin_north.iter().rev()).copied().collect();
        let cot_theta = cot_north
            .iter()
            .copied()
            .chain(cot_north.iter().rev().map(|c| -c))
            .collect();
        let half = (0.5 * h).sin();
        let cell_area = sin_theta.iter().map(|s| FOUR_PI * s * half).collect();
        Ok(Self {
            n,
            h,
            theta,
            sin_theta,
            cot_theta,
            cell_area,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Spacing `π/n`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn cell_area(&self) -> &[f64] {
        &self.cell_area
    }

    /// Lower edge of cell `i`.
    fn edge(&self, i: usize) -> f64 {
        i as f64 * self.h
    }
}

/// Builds the cell-centered grid `θ_i = (i + 1/2) π / n`.
pub fn build_grid(n: usize) -> Result<LatitudeGrid> {
    LatitudeGrid::new(n)
}

/// Conformal factor samples together with the flow time.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricState {
    grid: Arc<LatitudeGrid>,
    u: Vec<f64>,
    t: f64,
}

impl MetricState {
    pub fn new(grid: Arc<LatitudeGrid>, u: Vec<f64>, t: f64) -> Result<Self> {
        if u.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: u.len(),
            });
        }
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, u, t })
    }

    /// Samples `u` from a closure of the colatitude.
    pub fn from_fn(grid: Arc<LatitudeGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let u = grid.theta().iter().map(|&th| f(th)).collect();
        Self::new(grid, u, 0.0)
    }

    pub fn round(grid: Arc<LatitudeGrid>) -> Self {
        let n = grid.n();
        Self {
            grid,
            u: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &LatitudeGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<LatitudeGrid> {
        Arc::clone(&self.grid)
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn with_u(&self, u: Vec<f64>, t: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            u,
            t,
        }
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Linear interpolation of `u`; constant beyond the outermost nodes,
    /// which is what mirroring across the pole gives.
    pub fn u_at(&self, theta: f64) -> f64 {
        let n = self.grid.n;
        let s = theta / self.grid.h - 0.5;
        if s <= 0.0 {
            return self.u[0];
        }
        let i = s.floor() as usize;
        if i >= n - 1 {
            return self.u[n - 1];
        }
        let w = s - i as f64;
        (1.0 - w) * self.u[i] + w * self.u[i + 1]
    }

    /// Cell index containing `theta` and the lower edge of that cell.
    fn cell_of(&self, theta: f64) -> usize {
        ((theta / self.grid.h).floor() as usize).min(self.grid.n - 1)
    }

    /// Metric area of each full cell.
    pub(crate) fn cell_masses(&self) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.grid.cell_area)
            .map(|(u, w)| (2.0 * u).exp() * w)
            .collect()
    }
}

/// Axisymmetric round-sphere Laplacian `(1/sinθ) d/dθ (sinθ du/dθ)`.
pub fn round_laplacian(grid: &LatitudeGrid, u: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let inv_2h = 0.5 / grid.h;
    (0..n)
        .map(|i| {
            let um = if i == 0 { u[0] } else { u[i - 1] };
            let up = if i == n - 1 { u[n - 1] } else { u[i + 1] };
            (up - 2.0 * u[i] + um) * inv_h2 + grid.cot_theta[i] * (up - um) * inv_2h
        })
        .collect()
}

/// Pointwise Gaussian curvature `K = e^{-2u} (1 − Δ₀u)` at the grid nodes.
pub fn gaussian_curvature(grid: &LatitudeGrid, u: &[f64]) -> Vec<f64> {
    round_laplacian(grid, u)
        .into_iter()
        .zip(u)
        .map(|(lap, ui)| (-2.0 * ui).exp() * (1.0 - lap))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub k: Vec<f64>,
    /// Maximum of `K` over the nodes.
    pub kappa: f64,
    pub k_min: f64,
    /// `∫ K dV` with the area quadrature.
    pub gb: f64,
}

pub fn curvature(state: &MetricState) -> CurvatureField {
    let k = gaussian_curvature(&state.grid, &state.u);
    let (k_min, kappa) = k
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let gb = k
        .iter()
        .zip(state.cell_masses())
        .map(|(k, m)| k * m)
        .sum();
    CurvatureField {
        k,
        kappa,
        k_min,
        gb,
    }
}

pub fn total_area(state: &MetricState) -> f64 {
    state.cell_masses().iter().sum()
}

/// Shifts `u` by a constant so that the discrete total area is `4π`.
pub fn project_area(state: &MetricState) -> MetricState {
    let shift = 0.5 * (total_area(state) / FOUR_PI).ln();
    let u = state.u.iter().map(|x| x - shift).collect();
    state.with_u(u, state.t)
}

fn check_closed_theta(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::domain("theta", theta, "[0, π]"));
    }
    Ok(())
}

/// `cos a − cos b` without cancellation for nearby arguments.
fn cos_diff(a: f64, b: f64) -> f64 {
    2.0 * (0.5 * (a + b)).sin() * (0.5 * (b - a)).sin()
}

/// Area of the polar cap `{θ' < θ}`.
pub fn cap_area(state: &MetricState, theta: f64) -> Result<f64> {
    check_closed_theta(theta)?;
    let masses = state.cell_masses();
    let m = state.cell_of(theta);
    let full: f64 = masses[..m].iter().sum();
    let lo = state.grid.edge(m);
    let partial = 2.0 * PI * (2.0 * state.u[m]).exp() * cos_diff(lo, theta);
    Ok(full + partial)
}

/// Length of the latitude circle at colatitude `theta`.
pub fn cap_length(state: &MetricState, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::domain("theta", theta, "(0, π)"));
    }
    Ok(2.0 * PI * state.u_at(theta).exp() * theta.sin())
}

/// Geodesic distance from the north pole to the latitude circle at `theta`.
pub fn meridian_distance(state: &MetricState, theta: f64) -> Result<f64> {
    check_closed_theta(theta)?;
    let h = state.grid.h;
    let m = state.cell_of(theta);
    let full: f64 = state.u[..m].iter().map(|u| u.exp() * h).sum();
    Ok(full + state.u[m].exp() * (theta - state.grid.edge(m)))
}

/// Inverts [`cap_area`]: bisection over the cumulative cell areas, then the
/// closed-form inverse inside the bracketing cell.
pub fn theta_for_area(state: &MetricState, a: f64) -> Result<f64> {
    let masses = state.cell_masses();
    let mut prefix = Vec::with_capacity(masses.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for m in &masses {
        acc += m;
        prefix.push(acc);
    }
    let total = acc;
    if !(a > 0.0 && a < total) {
        return Err(Error::domain("a", a, format!("(0, {total})")));
    }
    // largest m with prefix[m] <= a
    let (mut lo, mut hi) = (0usize, masses.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if prefix[mid] <= a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = lo;
    let edge = state.grid.edge(m);
    let rest = (a - prefix[m]) / (2.0 * PI * (2.0 * state.u[m]).exp());
    // cos(edge) − cos(θ) = rest
    let cos_theta = (edge.cos() - rest).clamp(-1.0, 1.0);
    let theta = cos_theta.acos().clamp(edge, state.grid.edge(m + 1));
    Ok(theta)
}
