//! Per-save observables and the `series.csv` layout.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{self, ComparisonParams};
use crate::error::Result;
use crate::isoperimetric::{self, IsoProfilePoint};
use crate::metric::{self, MetricState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaSample {
    pub a: f64,
    pub ratio_sq: f64,
    /// Logistic comparison value with `C` fixed by `I²(0)`.
    pub sigmoid: f64,
    pub cf_bound: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub kappa: f64,
    pub k_min: f64,
    pub area: f64,
    pub gauss_bonnet: f64,
    pub per_area: Vec<AreaSample>,
    /// `(κ(0) − 1) e^{−2t}`.
    pub decay_bound: f64,
}

/// Comparison offset from a measured initial ratio. Ratios above one admit
/// `C = +∞`, the constant solution.
pub(crate) fn initial_offset(i_sq_0: f64) -> Result<f64> {
    bounds::c_from_initial(i_sq_0.min(1.0))
}

pub fn build_records(states: &[MetricState], a_grid: &[f64]) -> Result<Vec<TimeSeriesRecord>> {
    let Some(first) = states.first() else {
        return Ok(Vec::new());
    };
    let initial = isoperimetric::latitude_profile(first, a_grid)?;
    let params: Vec<ComparisonParams> = initial
        .iter()
        .map(|p| ComparisonParams::new(p.a, initial_offset(p.ratio_sq)?))
        .collect::<Result<_>>()?;
    let kappa0 = metric::curvature(first).kappa;

    (0..states.len())
        .into_par_iter()
        .map(|k| {
            let state = &states[k];
            let field = metric::curvature(state);
            let profile: Vec<IsoProfilePoint> = isoperimetric::latitude_profile(state, a_grid)?;
            let per_area = profile
                .iter()
                .zip(&params)
                .map(|(p, c)| {
                    Ok(AreaSample {
                        a: p.a,
                        ratio_sq: p.ratio_sq,
                        sigmoid: bounds::comparison_solution(c, state.t()),
                        cf_bound: isoperimetric::cf_lower_bound(p.a, field.kappa),
                        residual: isoperimetric::residual_at(states, k, p.a)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TimeSeriesRecord {
                t: state.t(),
                kappa: field.kappa,
                k_min: field.k_min,
                area: metric::total_area(state),
                gauss_bonnet: field.gb,
                per_area,
                decay_bound: (kappa0 - 1.0) * (-2.0 * state.t()).exp(),
            })
        })
        .collect()
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(a_grid: &[f64]) -> String {
    let mut cols: Vec<String> = ["t", "kappa", "k_min", "area", "gauss_bonnet"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for a in a_grid {
        for name in ["ratio_sq", "sigmoid", "cf_bound", "residual"] {
            cols.push(format!("{name}@{a}"));
        }
    }
    cols.push("decay_bound".into());
    cols.join(",")
}

pub fn write_csv<W: Write>(mut w: W, a_grid: &[f64], records: &[TimeSeriesRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", csv_header(a_grid))?;
    for r in records {
        let mut row = vec![num(r.t), num(r.kappa), num(r.k_min), num(r.area), num(r.gauss_bonnet)];
        for s in &r.per_area {
            row.extend([num(s.ratio_sq), num(s.sigmoid), num(s.cf_bound), num(s.residual)]);
        }
        row.push(num(r.decay_bound));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
