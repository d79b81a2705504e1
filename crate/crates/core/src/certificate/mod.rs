//! Test-function functionals for the blow-up argument.

mod bump;

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

pub use bump::{phi_r, phi_r_derivative_bounds, plateau_bump, BumpProfile, DerivativeBounds, Jet};

use crate::diagnostics::series::csv_err;
use crate::error::{Error, Result};
use crate::grid::quadrature::{integrate_nodes, pairwise_sum};
use crate::grid::{Field, GridSpec};
use crate::solver::{run_observed, RunOutcome, SolverConfig};

/// Fewest time levels accepted on `[0, min(R^2, t_last)]`.
pub const MIN_TIME_SAMPLES: usize = 64;

/// Lebesgue measure of `D_R = B_n(R) x B_n(R) x [-R^2, R^2]`.
pub fn measure_d_r(r: f64, n: usize) -> f64 {
    let mut v = [1.0, 2.0];
    for k in 2..=n {
        v[k % 2] *= 2.0 * std::f64::consts::PI / k as f64;
    }
    let ball = v[n % 2] * r.powi(n as i32);
    ball * ball * 2.0 * r * r
}

#[derive(Debug, Clone, Copy, Default)]
struct Running {
    i: f64,
    i_hat: f64,
    i_tilde: f64,
    prev: Option<(f64, [f64; 3])>,
    samples: usize,
}

impl Running {
    fn push(&mut self, t: f64, f: [f64; 3]) {
        if let Some((t0, f0)) = self.prev {
            let h = 0.5 * (t - t0);
            self.i += h * (f0[0] + f[0]);
            self.i_hat += h * (f0[1] + f[1]);
            self.i_tilde += h * (f0[2] + f[2]);
        }
        self.prev = Some((t, f));
        self.samples += 1;
    }
}

/// Accumulates `I_R`, `Î_R` and `Ĩ_R` over a stream of solution levels.
///
/// Spatial integrals use the grid quadrature, time integrals the trapezoid
/// rule over the levels seen. `Î_R` integrates over `t in [R^2/4, R^2]`,
/// `Ĩ_R` over the part of `D_R` where `|x| >= R/2`, `|y| >= R/2` or
/// `|tau| >= R^2/4`.
pub struct CertificateAccumulator {
    grid: Arc<GridSpec>,
    p: f64,
    radii: Vec<f64>,
    spatial: Vec<Vec<f64>>,
    tilde: Vec<Vec<f64>>,
    j: Vec<f64>,
    running: Vec<Running>,
    power: Vec<f64>,
    t_last: Option<f64>,
}

impl CertificateAccumulator {
    pub fn new(u0: &Field, u1: &Field, p: f64, radii: &[f64]) -> Result<Self> {
        BumpProfile::new(p)?;
        if !u0.same_grid(u1) {
            return Err(Error::invalid("u0 and u1 live on different grids"));
        }
        if radii.is_empty() {
            return Err(Error::invalid("no radii given"));
        }
        let grid = Arc::clone(u0.grid());
        for &r in radii {
            if !(r.is_finite() && r > 1.0) {
                return Err(Error::invalid(format!("R must exceed 1, got {r}")));
            }
            if !grid.contains_box(r, r * r) {
                return Err(Error::invalid(format!("D_R for R = {r} exceeds the grid")));
            }
        }
        let (mut spatial, mut tilde, mut j) = (Vec::new(), Vec::new(), Vec::new());
        let data = u0.zip_map(u1, |a, b| a + b)?;
        let d = data.values();
        for &r in radii {
            let (s, st): (Vec<f64>, Vec<f64>) = (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let eta = grid.point_at(i);
                    let s = bump::phi_r_unchecked(0.0, &eta, r);
                    let xn = eta.x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let yn = eta.y.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let outer = xn >= 0.5 * r || yn >= 0.5 * r || eta.tau.abs() >= 0.25 * r * r;
                    (s, if outer { s } else { 0.0 })
                })
                .unzip();
            j.push(integrate_nodes(&grid, |i, _, _| d[i] * s[i]));
            spatial.push(s);
            tilde.push(st);
        }
        Ok(CertificateAccumulator {
            p,
            radii: radii.to_vec(),
            spatial,
            tilde,
            j,
            running: vec![Running::default(); radii.len()],
            power: vec![0.0; grid.len()],
            grid,
            t_last: None,
        })
    }

    /// Feed the level `u(t, .)`; times must increase strictly from 0.
    pub fn observe(&mut self, t: f64, u: &Field) -> Result<()> {
        if !Arc::ptr_eq(u.grid(), &self.grid) && u.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::invalid("level lives on a different grid"));
        }
        match self.t_last {
            None if t != 0.0 => return Err(Error::invalid("first level must be at t = 0")),
            Some(prev) if !(t > prev) => {
                return Err(Error::invalid(format!("time {t} does not follow {prev}")))
            }
            _ => {}
        }
        if !t.is_finite() {
            return Err(Error::invalid("non-finite level time"));
        }
        self.t_last = Some(t);
        let live = self
            .radii
            .iter()
            .zip(&self.running)
            .any(|(r, run)| !run.prev.is_some_and(|(t0, _)| t0 >= r * r));
        if !live {
            return Ok(());
        }
        let p = self.p;
        self.power
            .par_iter_mut()
            .zip(u.values().par_iter())
            .for_each(|(w, v)| *w = v.abs().powf(p));
        let pw = &self.power;
        for (k, &r) in self.radii.iter().enumerate() {
            let r2 = r * r;
            let run = &mut self.running[k];
            if run.prev.is_some_and(|(t0, _)| t0 >= r2) {
                continue;
            }
            let time_factor = BumpProfile::beta(t / r2);
            let f = if time_factor > 0.0 {
                let (s, st) = (&self.spatial[k], &self.tilde[k]);
                let a = integrate_nodes(&self.grid, |i, _, _| pw[i] * s[i]);
                let at = integrate_nodes(&self.grid, |i, _, _| pw[i] * st[i]);
                let fi = time_factor * a;
                [fi, if t >= 0.25 * r2 { fi } else { 0.0 }, time_factor * at]
            } else {
                [0.0; 3]
            };
            if !f.iter().all(|v| v.is_finite()) {
                return Err(Error::Numeric(format!("functional integrand overflowed at t = {t}")));
            }
            run.push(t, f);
        }
        Ok(())
    }

    pub fn finish(self) -> Result<CertificateReport> {
        let t_last = self.t_last.ok_or_else(|| Error::invalid("no levels observed"))?;
        let n = self.grid.n();
        let q = (2 * n + 2) as f64;
        let exponent = q - (q + 2.0) / self.p;
        let mut rows = Vec::with_capacity(self.radii.len());
        for (k, &r) in self.radii.iter().enumerate() {
            let run = &self.running[k];
            let covered = t_last.min(r * r);
            if run.samples < MIN_TIME_SAMPLES {
                return Err(Error::invalid(format!(
                    "insufficient snapshots: {} levels cover [0, {covered}] for R = {r}, need {MIN_TIME_SAMPLES}",
                    run.samples
                )));
            }
            let (i, j) = (run.i, self.j[k]);
            let r_power = r.powf(exponent);
            let ratio = if i > 0.0 {
                (i + j) / (r_power * i.powf(1.0 / self.p))
            } else if j > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            rows.push(CertificateRow {
                r,
                i_r: i,
                j_r: j,
                i_hat: run.i_hat,
                i_tilde: run.i_tilde,
                ratio,
                exponent,
                r_power,
                t_covered: covered,
                truncated: t_last < r * r,
                samples: run.samples,
            });
        }
        let ratio_nondecreasing = rows.windows(2).all(|w| w[1].ratio >= w[0].ratio);
        Ok(CertificateReport {
            p: self.p,
            exponent,
            measure_ratio: measure_d_r(2.0, n) / measure_d_r(1.0, n),
            ratio_nondecreasing,
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateRow {
    pub r: f64,
    pub i_r: f64,
    pub j_r: f64,
    pub i_hat: f64,
    pub i_tilde: f64,
    pub ratio: f64,
    pub exponent: f64,
    pub r_power: f64,
    /// Upper end of the time interval actually integrated.
    pub t_covered: f64,
    /// The run stopped before `R^2`.
    pub truncated: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub p: f64,
    pub exponent: f64,
    pub measure_ratio: f64,
    pub ratio_nondecreasing: bool,
    pub rows: Vec<CertificateRow>,
}

impl CertificateReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["R", "I_R", "J_R", "I_hat", "I_tilde", "ratio", "exponent"])
            .map_err(csv_err)?;
        for r in &self.rows {
            out.write_record(
                [r.r, r.i_r, r.j_r, r.i_hat, r.i_tilde, r.ratio, r.exponent].map(|v| v.to_string()),
            )
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Run the semilinear solver and accumulate the functionals on every level.
pub fn certificate_sweep(
    u0: &Field,
    u1: &Field,
    cfg: &SolverConfig,
    radii: &[f64],
) -> Result<(RunOutcome, CertificateReport)> {
    let p = cfg
        .p
        .ok_or_else(|| Error::invalid("the certificate needs a semilinear run"))?;
    let mut acc = CertificateAccumulator::new(u0, u1, p, radii)?;
    let outcome = run_observed(u0, u1, cfg, |level| acc.observe(level.t, level.u))?;
    Ok((outcome, acc.finish()?))
}

/// `I_R` for `u = 1` from 1-D quadratures, with the trapezoid rule over `times`.
pub fn separable_unit_functional(grid: &GridSpec, r: f64, times: &[f64]) -> f64 {
    let r2 = r * r;
    let b: Vec<f64> = times.iter().map(|t| BumpProfile::beta(t / r2)).collect();
    let time: f64 = pairwise_sum(
        &times
            .windows(2)
            .zip(b.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .collect::<Vec<_>>(),
    );
    let axis = |a: usize, f: &dyn Fn(f64) -> f64| -> f64 {
        let w = grid.axis_weights(a);
        pairwise_sum(&(0..w.len()).map(|i| w[i] * f(grid.coord(a, i))).collect::<Vec<_>>())
    };
    let n = grid.n();
    let mut space = axis(2 * n, &|tau| BumpProfile::beta(tau / r2));
    if n == 1 {
        space *= axis(0, &|x| BumpProfile::alpha(x.abs() / r)) * axis(1, &|y| BumpProfile::alpha(y.abs() / r));
    }
    time * space
}
