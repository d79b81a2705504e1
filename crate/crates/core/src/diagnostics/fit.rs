use std::io::Write;

use serde::Serialize;

use super::series::{csv_err, Column, TimeSeries};
use crate::error::{Error, Result};
use crate::geometry::HeisenbergParams;

/// Least-squares fit of `log(value)` against `log(1 + t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

pub const MIN_FIT_ROWS: usize = 8;

pub fn fit_decay(series: &TimeSeries, column: Column, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(Error::InvalidWindow(format!("window ({lo}, {hi}) is not an interval in t >= 0")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in series.rows().iter().filter(|r| r.t >= lo && r.t <= hi) {
        let v = r
            .get(column)
            .ok_or_else(|| Error::InvalidWindow(format!("column {column} missing at t = {}", r.t)))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidWindow(format!(
                "column {column} has non-positive value {v} at t = {}",
                r.t
            )));
        }
        xs.push((1.0 + r.t).ln());
        ys.push(v.ln());
    }
    if xs.len() < MIN_FIT_ROWS {
        return Err(Error::InvalidWindow(format!(
            "{} rows in ({lo}, {hi}); at least {MIN_FIT_ROWS} required",
            xs.len()
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON * m * my.abs().max(1.0) {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        window,
        samples: xs.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    pub column: Column,
    pub window_lo: f64,
    pub window_hi: f64,
    pub slope: f64,
    pub r2: f64,
    pub target_slope: f64,
}

impl FitRow {
    pub fn new(column: Column, fit: &DecayFit, target_slope: f64) -> Self {
        FitRow {
            column,
            window_lo: fit.window.0,
            window_hi: fit.window.1,
            slope: fit.slope,
            r2: fit.r_squared,
            target_slope,
        }
    }
}

pub fn write_fit_csv<W: Write>(w: W, rows: &[FitRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(["column", "window_lo", "window_hi", "slope", "r2", "target_slope"])
            .map_err(csv_err)?;
    }
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monotonicity {
    /// Largest `(E_{k+1} - E_k) / max(E_k, tiny)`; negative for strict decay.
    pub max_relative_increase: f64,
    pub holds: bool,
}

pub const MONOTONICITY_TOL: f64 = 1e-3;

pub fn weighted_energy_monotonicity(series: &TimeSeries, tol: f64) -> Result<Monotonicity> {
    let e = series
        .column(Column::WeightedEnergy)
        .ok_or_else(|| Error::invalid("series has no weighted_energy column"))?;
    let max = e
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE))
        .fold(if e.len() < 2 { 0.0 } else { f64::NEG_INFINITY }, f64::max);
    let max = if max == 0.0 { 0.0 } else { max };
    Ok(Monotonicity {
        max_relative_increase: max,
        holds: max <= tol,
    })
}

/// Supremum over rows of the solution-space norm. The weighted part uses
/// `sqrt(2 E_psi)`, which is within a factor `sqrt 2` of
/// `||e^psi grad_H u|| + ||e^psi u_t||`; rows without a weighted energy
/// contribute only the decay-scaled terms.
pub fn solution_norm_x(series: &TimeSeries, params: &HeisenbergParams) -> f64 {
    let q4 = params.homogeneous_dim() as f64 / 4.0;
    series
        .rows()
        .iter()
        .map(|r| {
            let s = 1.0 + r.t;
            r.weighted_energy.map_or(0.0, |e| (2.0 * e).sqrt())
                + s.powf(q4) * r.l2_u
                + s.powf(q4 + 0.5) * r.l2_grad_u
                + s.powf(q4 + 1.0) * r.l2_ut
        })
        .fold(0.0, f64::max)
}
