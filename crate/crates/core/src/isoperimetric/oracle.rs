//! Randomized search for short closed curves enclosing a prescribed area.
//!
//! Candidates are star-shaped around a center point on the sphere: the curve
//! is `ρ(ψ)` in round geodesic polar coordinates about the center, sampled at
//! `resolution` angles. The enclosed region `{ρ' < ρ(ψ)}` is integrated in the
//! same polar chart, and the area constraint is restored after every move by
//! scaling `ρ` about the center. The result only ever bounds the true infimum
//! from above.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{self, MetricState, FOUR_PI};

const RHO_MIN: f64 = 1e-4;
const RHO_MAX: f64 = PI - 1e-4;
/// Smoothed moves attempted per trial.
const MOVES_PER_TRIAL: usize = 12;
const FOURIER_MODES: usize = 4;

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Local orthonormal frame `(c, e_θ, e_φ)` at colatitude/longitude.
fn frame(theta: f64, phi: f64) -> [Vec3; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [[st * cp, st * sp, ct], [ct * cp, ct * sp, -st], [-sp, cp, 0.0]]
}

fn colatitude(p: Vec3) -> f64 {
    (p[2] / norm(p)).clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveCandidate {
    /// Colatitude and longitude of the polar center.
    pub center: (f64, f64),
    /// Polar radius at the equally spaced angles `ψ_k = 2πk/M`.
    pub radii: Vec<f64>,
    pub enclosed_area: f64,
    pub length: f64,
}

impl CurveCandidate {
    /// Vertices as `(θ, φ)` chart points.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let f = frame(self.center.0, self.center.1);
        let m = self.radii.len();
        (0..m)
            .map(|k| {
                let p = polar_point(&f, self.radii[k], 2.0 * PI * k as f64 / m as f64);
                (colatitude(p), p[1].atan2(p[0]).rem_euclid(2.0 * PI))
            })
            .collect()
    }
}

fn polar_point(f: &[Vec3; 3], rho: f64, psi: f64) -> Vec3 {
    let (sr, cr) = rho.sin_cos();
    let (sp, cp) = psi.sin_cos();
    let mut p = [0.0; 3];
    for i in 0..3 {
        p[i] = cr * f[0][i] + sr * (cp * f[1][i] + sp * f[2][i]);
    }
    p
}

/// Metric evaluation of star-shaped curves on one state.
struct Evaluator<'a> {
    state: &'a MetricState,
    resolution: usize,
}

impl Evaluator<'_> {
    fn conformal(&self, p: Vec3) -> f64 {
        self.state.u_at(colatitude(p))
    }

    /// Area inside `ρ(ψ)`: each angular sector is split into `resolution`
    /// radial cells, `e^{2u}` is taken at the cell midpoint and `sin ρ dρ` is
    /// integrated exactly.
    fn area(&self, center: (f64, f64), radii: &[f64]) -> f64 {
        let f = frame(center.0, center.1);
        let m = radii.len();
        let q = self.resolution;
        let dpsi = 2.0 * PI / m as f64;
        let mut total = 0.0;
        for (k, &rho) in radii.iter().enumerate() {
            let psi = k as f64 * dpsi;
            let dr = rho / q as f64;
            let mut sector = 0.0;
            for j in 0..q {
                let lo = j as f64 * dr;
                let hi = lo + dr;
                let mid = lo + 0.5 * dr;
                let ring = 2.0 * (0.5 * (lo + hi)).sin() * (0.5 * dr).sin();
                sector += (2.0 * self.conformal(polar_point(&f, mid, psi))).exp() * ring;
            }
            total += sector * dpsi;
        }
        total
    }

    /// Polyline length with Simpson's rule for the conformal weight along each
    /// great-circle chord.
    fn length(&self, center: (f64, f64), radii: &[f64]) -> f64 {
        let f = frame(center.0, center.1);
        let m = radii.len();
        let pts: Vec<Vec3> = (0..m)
            .map(|k| polar_point(&f, radii[k], 2.0 * PI * k as f64 / m as f64))
            .collect();
        let weights: Vec<f64> = pts.iter().map(|&p| self.conformal(p).exp()).collect();
        (0..m)
            .map(|k| {
                let (p, q) = (pts[k], pts[(k + 1) % m]);
                let chord = norm([q[0] - p[0], q[1] - p[1], q[2] - p[2]]);
                let angle = 2.0 * (0.5 * chord).min(1.0).asin();
                let mid = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                let w_mid = if norm(mid) > 1e-12 {
                    self.conformal(mid).exp()
                } else {
                    0.5 * (weights[k] + weights[(k + 1) % m])
                };
                angle * (weights[k] + 4.0 * w_mid + weights[(k + 1) % m]) / 6.0
            })
            .collect::<Vec<_>>()
            .iter()
            .sum()
    }

    fn scaled(radii: &[f64], s: f64) -> Vec<f64> {
        radii.iter().map(|r| (r * s).clamp(RHO_MIN, RHO_MAX)).collect()
    }

    /// Rescales the radii about the center until the enclosed area is `a`.
    /// Returns `None` when the shape cannot reach `a`.
    fn project(&self, center: (f64, f64), radii: &[f64], a: f64) -> Option<CurveCandidate> {
        let max_r = radii.iter().copied().fold(0.0_f64, f64::max);
        let min_r = radii.iter().copied().fold(f64::INFINITY, f64::min);
        if !(max_r > 0.0) {
            return None;
        }
        let area_at = |s: f64| self.area(center, &Self::scaled(radii, s)) - a;
        let (mut lo, mut hi) = (0.0, RHO_MAX / min_r);
        let (mut flo, mut fhi) = (-a, area_at(hi));
        if fhi < 0.0 {
            return None;
        }
        // Illinois variant of regula falsi
        let mut side = 0i8;
        for _ in 0..80 {
            let s = (lo * fhi - hi * flo) / (fhi - flo);
            let fs = area_at(s);
            if fs.abs() <= 1e-11 * FOUR_PI || hi - lo <= 1e-14 * hi {
                lo = s;
                hi = s;
                break;
            }
            if fs > 0.0 {
                hi = s;
                fhi = fs;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            } else {
                lo = s;
                flo = fs;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            }
        }
        let s = 0.5 * (lo + hi);
        let radii = Self::scaled(radii, s);
        Some(CurveCandidate {
            center,
            enclosed_area: self.area(center, &radii),
            length: self.length(center, &radii),
            radii,
        })
    }
}

/// Result of a curve search, alongside the latitude circle it competes with.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    /// Shortest length found, never above `latitude_length`.
    pub best_length: f64,
    pub latitude_length: f64,
    /// Best polyline candidate (the latitude seed if nothing beat it).
    pub candidate: CurveCandidate,
}

impl OracleOutcome {
    pub fn ratio(&self) -> f64 {
        self.best_length / self.latitude_length
    }
}

/// Seed centers: both poles and intermediate colatitudes on one meridian.
fn seed_centers() -> Vec<(f64, f64)> {
    (0..=6).map(|i| (i as f64 * PI / 6.0, 0.0)).collect()
}

fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((trial as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn random_move(rng: &mut ChaCha8Rng, current: &CurveCandidate, sigma: f64) -> ((f64, f64), Vec<f64>) {
    let m = current.radii.len();
    let coeffs: Vec<(f64, f64)> = (0..FOURIER_MODES)
        .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let mean = current.radii.iter().sum::<f64>() / m as f64;
    let bump: Vec<f64> = (0..m)
        .map(|k| {
            let psi = 2.0 * PI * k as f64 / m as f64;
            let raw: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, (a, b))| {
                    let mode = (j + 1) as f64;
                    (a * (mode * psi).cos() + b * (mode * psi).sin()) / mode
                })
                .sum();
            sigma * mean * raw
        })
        .collect();
    // one pass of [1 2 1]/4 smoothing on the perturbation
    let radii = (0..m)
        .map(|k| {
            let s = 0.25 * (bump[(k + m - 1) % m] + 2.0 * bump[k] + bump[(k + 1) % m]);
            (current.radii[k] + s).clamp(RHO_MIN, RHO_MAX)
        })
        .collect();
    let mut center = current.center;
    if rng.gen_bool(0.5) {
        let dt: f64 = rng.sample(StandardNormal);
        let dp: f64 = rng.sample(StandardNormal);
        center.0 = (center.0 + sigma * dt).clamp(0.0, PI);
        center.1 += sigma * dp;
    }
    (center, radii)
}

/// Runs the search and reports the best curve next to the latitude circle.
pub fn search(
    state: &MetricState,
    a: f64,
    resolution: usize,
    trials: usize,
    seed: u64,
) -> Result<OracleOutcome> {
    if resolution < 16 {
        return Err(Error::domain("resolution", resolution as f64, "[16, ∞)"));
    }
    if trials < 1 {
        return Err(Error::domain("trials", trials as f64, "[1, ∞)"));
    }
    let theta = metric::theta_for_area(state, a)?;
    let latitude_length = metric::cap_length(state, theta)?;
    let eval = Evaluator { state, resolution };

    let latitude = eval
        .project((0.0, 0.0), &vec![theta; resolution], a)
        .ok_or_else(|| Error::domain("a", a, "reachable areas"))?;
    let rho0 = (1.0 - a / (2.0 * PI)).clamp(-1.0, 1.0).acos();
    let seeds: Vec<CurveCandidate> = std::iter::once(latitude.clone())
        .chain(
            seed_centers()
                .into_iter()
                .skip(1)
                .filter_map(|c| eval.project(c, &vec![rho0; resolution], a)),
        )
        .collect();

    let results: Vec<CurveCandidate> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
            let mut best = seeds[trial % seeds.len()].clone();
            for j in 0..MOVES_PER_TRIAL {
                let sigma = 0.08 * (1.0 - j as f64 / MOVES_PER_TRIAL as f64) + 0.005;
                let (center, radii) = random_move(&mut rng, &best, sigma);
                if let Some(c) = eval.project(center, &radii, a) {
                    if c.length < best.length {
                        best = c;
                    }
                }
            }
            best
        })
        .collect();

    let best = seeds
        .iter()
        .chain(results.iter())
        .min_by(|x, y| x.length.total_cmp(&y.length))
        .cloned()
        .unwrap_or(latitude);
    Ok(OracleOutcome {
        best_length: best.length.min(latitude_length),
        latitude_length,
        candidate: best,
    })
}

/// Shortest length found for curves enclosing `a`; an upper bound for the
/// infimum and never above the latitude circle.
pub fn brute_force_min_length(
    state: &MetricState,
    a: f64,
    resolution: usize,
    trials: usize,
) -> Result<f64> {
    Ok(search(state, a, resolution, trials, 0)?.best_length)
}
