//! Time stepping for `u_tt - Δ_H u + u_t = F(u)` with `F = 0` or `|u|^p`.
//!
//! Leapfrog in the principal part with the damping term averaged over
//! `u^{k+1}` and `u^{k-1}`:
//! `u^{k+1} = [2u^k - (1 - dt/2) u^{k-1} + dt^2 (Δ_H u^k + F(u^k))] / (1 + dt/2)`.
//! The first step uses the second-order Taylor start.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{Record, TimeSeries};
use crate::error::{Error, Result};
use crate::geometry::psi_raw;
use crate::grid::quadrature::{check_weight, integrate_nodes};
use crate::grid::{horizontal_gradient_into, map_sublaplacian, Field, GridSpec};

pub const DEFAULT_CFL_FRACTION: f64 = 0.9;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;
/// Width in cells of the outer shell watched by the boundary-mass monitor.
pub const BOUNDARY_SHELL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Exponent of `|u|^p`; `None` for the linear equation.
    pub p: Option<f64>,
    pub dt: TimeStep,
    pub t_end: f64,
    pub cfl_fraction: f64,
    pub blowup_threshold: f64,
    pub record_every: usize,
    pub snapshot_times: Vec<f64>,
}

impl SolverConfig {
    pub fn linear(t_end: f64) -> Self {
        SolverConfig {
            p: None,
            dt: TimeStep::Auto,
            t_end,
            cfl_fraction: DEFAULT_CFL_FRACTION,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            record_every: 1,
            snapshot_times: Vec::new(),
        }
    }

    pub fn semilinear(p: f64, t_end: f64) -> Self {
        SolverConfig {
            p: Some(p),
            ..SolverConfig::linear(t_end)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.p {
            if !(p.is_finite() && p > 1.0) {
                return Err(Error::invalid(format!("p must exceed 1, got {p}")));
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::invalid(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.cfl_fraction > 0.0 && self.cfl_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "cfl_fraction must lie in (0, 1], got {}",
                self.cfl_fraction
            )));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::invalid("blowup_threshold must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be at least 1"));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::invalid(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(s) = self.snapshot_times.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::invalid(format!("snapshot time {s} must be >= 0")));
        }
        Ok(())
    }

    /// Step size and step count. Automatic steps are shrunk so that an
    /// integer number of them lands exactly on `t_end`.
    pub fn resolve(&self, grid: &GridSpec) -> Result<(f64, u64)> {
        self.validate()?;
        let limit = cfl_limit(grid)?;
        match self.dt {
            TimeStep::Auto => {
                let steps = (self.t_end / (self.cfl_fraction * limit)).ceil().max(1.0);
                Ok((self.t_end / steps, steps as u64))
            }
            TimeStep::Fixed(dt) => {
                if dt > limit {
                    return Err(Error::invalid(format!(
                        "dt = {dt} exceeds the stability limit {limit:.6}"
                    )));
                }
                Ok((dt, (self.t_end / dt - 1e-9).ceil().max(1.0) as u64))
            }
        }
    }
}

/// `2 / sqrt(Λ)` with `Λ` a Gershgorin bound for the discrete `-Δ_H`.
pub fn cfl_limit(grid: &GridSpec) -> Result<f64> {
    grid.check_solver_grade()?;
    let h = grid.spacings();
    let r = grid.r_max();
    let lambda = 4.0 / (h[0] * h[0])
        + 4.0 / (h[1] * h[1])
        + r * r / (h[2] * h[2])
        + 2.0 * r * (1.0 / (h[0] * h[2]) + 1.0 / (h[1] * h[2]));
    Ok(2.0 / lambda.sqrt())
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub u_curr: Field,
    pub u_prev: Field,
    pub t: f64,
    pub step: u64,
    pub dt: f64,
}

fn source(p: Option<f64>, u: f64) -> f64 {
    match p {
        Some(p) => u.abs().powf(p),
        None => 0.0,
    }
}

/// `u^1 = u0 + dt u1 + dt^2/2 (Δ_H u0 - u1 + F(u0))`.
pub fn init_state(u0: &Field, u1: &Field, p: Option<f64>, dt: f64) -> Result<SolverState> {
    if !u0.same_grid(u1) {
        return Err(Error::invalid("u0 and u1 live on different grids"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let grid = u0.grid();
    let (a, b) = (u0.values(), u1.values());
    let mut next = Field::zeros(grid);
    map_sublaplacian(grid, a, next.values_mut(), |i, lap, _| {
        a[i] + dt * b[i] + 0.5 * dt * dt * (lap - b[i] + source(p, a[i]))
    })?;
    Ok(SolverState {
        u_curr: next,
        u_prev: u0.clone(),
        t: dt,
        step: 1,
        dt,
    })
}

fn check_state(state: &SolverState) -> Result<()> {
    if let Some(i) = state.u_curr.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            step: state.step,
            index: i,
        });
    }
    Ok(())
}

/// Advance one step in place. Non-finite output is reported as
/// [`Error::NonFinite`] with the index of the offending step.
pub fn step(state: &mut SolverState, p: Option<f64>) -> Result<()> {
    let dt = state.dt;
    let (damp_minus, inv_plus) = (1.0 - 0.5 * dt, 1.0 / (1.0 + 0.5 * dt));
    let grid = Arc::clone(state.u_curr.grid());
    {
        let cur = state.u_curr.values();
        map_sublaplacian(&grid, cur, state.u_prev.values_mut(), |i, lap, old| {
            (2.0 * cur[i] - damp_minus * old + dt * dt * (lap + source(p, cur[i]))) * inv_plus
        })?;
    }
    std::mem::swap(&mut state.u_curr, &mut state.u_prev);
    state.step += 1;
    state.t = state.step as f64 * dt;
    check_state(state)
}

/// Undamped, source-free leapfrog `u^{k+1} = 2u^k - u^{k-1} + dt^2 Δ_H u^k`.
///
/// Swapping `u_curr` and `u_prev` reverses time, so `k` forward steps
/// followed by a swap and `k` more steps return the initial pair.
pub fn step_undamped(state: &mut SolverState) -> Result<()> {
    let dt = state.dt;
    let grid = Arc::clone(state.u_curr.grid());
    {
        let cur = state.u_curr.values();
        map_sublaplacian(&grid, cur, state.u_prev.values_mut(), |i, lap, old| {
            2.0 * cur[i] - old + dt * dt * lap
        })?;
    }
    std::mem::swap(&mut state.u_curr, &mut state.u_prev);
    state.step += 1;
    state.t = state.step as f64 * dt;
    check_state(state)
}

/// Time-reverse the pair in place.
pub fn reverse(state: &mut SolverState) {
    std::mem::swap(&mut state.u_curr, &mut state.u_prev);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlewUp,
    NumericFailure,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Completed => "completed",
            RunStatus::BlewUp => "blew_up",
            RunStatus::NumericFailure => "numeric_failure",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub t_blowup: Option<f64>,
    pub series: TimeSeries,
    pub snapshots: Vec<Snapshot>,
    pub dt: f64,
    pub steps: u64,
    /// Time of the last accepted solution level.
    pub t_final: f64,
    pub failure: Option<String>,
}

/// Solution level handed to a [`run_observed`] observer.
pub struct Level<'a> {
    pub step: u64,
    pub t: f64,
    pub u: &'a Field,
}

/// Run without an observer.
pub fn run(u0: &Field, u1: &Field, cfg: &SolverConfig) -> Result<RunOutcome> {
    run_observed(u0, u1, cfg, |_| Ok(()))
}

/// Drive the scheme to `t_end`, a threshold crossing, or a failure.
///
/// `observe` sees `u^0, u^1, ...` in order, up to and including the first
/// level past the stopping criterion. Errors it returns abort the run.
pub fn run_observed<O>(u0: &Field, u1: &Field, cfg: &SolverConfig, mut observe: O) -> Result<RunOutcome>
where
    O: FnMut(Level<'_>) -> Result<()>,
{
    if !u0.same_grid(u1) {
        return Err(Error::invalid("u0 and u1 live on different grids"));
    }
    if !(u0.is_finite() && u1.is_finite()) {
        return Err(Error::invalid("initial data must be finite"));
    }
    let grid = Arc::clone(u0.grid());
    let (dt, steps) = cfg.resolve(&grid)?;
    let monitor = Monitor::new(&grid);
    let mut series = TimeSeries::new();
    let mut snapshots = Vec::new();
    let mut pending: Vec<f64> = cfg.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();
    let mut take_snapshots = |t: f64, u: &Field, out: &mut Vec<Snapshot>| {
        while pending.last().is_some_and(|&s| s <= t + 1e-9 * dt) {
            pending.pop();
            out.push(Snapshot { t, field: u.clone() });
        }
    };

    series.push(monitor.record(0.0, u0, u1)?)?;
    observe(Level { step: 0, t: 0.0, u: u0 })?;
    take_snapshots(0.0, u0, &mut snapshots);

    let linear = cfg.p.is_none();
    let mut out = RunOutcome {
        status: RunStatus::Completed,
        t_blowup: None,
        series: TimeSeries::new(),
        snapshots: Vec::new(),
        dt,
        steps,
        t_final: steps as f64 * dt,
        failure: None,
    };
    let mut state = init_state(u0, u1, cfg.p, dt)?;
    let mut advanced = check_state(&state);
    loop {
        let k = state.step;
        if let Err(e) = advanced {
            if !matches!(e, Error::NonFinite { .. }) {
                return Err(e);
            }
            // u^k is unusable; u^{k-1} was the last accepted level
            out.status = if linear { RunStatus::NumericFailure } else { RunStatus::BlewUp };
            out.t_blowup = (!linear).then_some(state.t);
            out.failure = Some(e.to_string());
            out.steps = k - 1;
            out.t_final = state.t - dt;
            break;
        }
        let u = &state.u_curr;
        let linf = u.values().par_iter().map(|v| v.abs()).reduce(|| 0.0, f64::max);
        observe(Level { step: k, t: state.t, u })?;
        take_snapshots(state.t, u, &mut snapshots);
        if linf > cfg.blowup_threshold {
            if linear {
                out.status = RunStatus::NumericFailure;
                out.failure = Some(format!(
                    "linear run exceeded sup norm {:.3e} at t = {}",
                    cfg.blowup_threshold, state.t
                ));
            } else {
                out.status = RunStatus::BlewUp;
                out.t_blowup = Some(state.t);
            }
            out.steps = k;
            out.t_final = state.t;
            break;
        }
        let due = k % cfg.record_every as u64 == 0 || k == steps;
        if !due && k == steps {
            break;
        }
        if due {
            // centered u_t needs u^{k+1}; the update overwrites u^{k-1}
            let prev = state.u_prev.clone();
            advanced = step(&mut state, cfg.p);
            if advanced.is_ok() {
                let ut = state.u_curr.zip_map(&prev, |a, b| (a - b) / (2.0 * dt))?;
                series.push(monitor.record(state.t - dt, &state.u_prev, &ut)?)?;
            }
            if k == steps {
                if let Err(e) = advanced {
                    // the extra level only served the last row
                    out.failure = Some(format!("final diagnostic row skipped: {e}"));
                }
                break;
            }
        } else {
            advanced = step(&mut state, cfg.p);
        }
    }
    out.series = series;
    out.snapshots = snapshots;
    Ok(out)
}

/// Reusable buffers and tables for diagnostic rows.
struct Monitor {
    gx: std::cell::RefCell<Vec<f64>>,
    gy: std::cell::RefCell<Vec<f64>>,
    shell: Vec<bool>,
    grid: Arc<GridSpec>,
}

impl Monitor {
    fn new(grid: &Arc<GridSpec>) -> Self {
        let shell = (0..grid.len())
            .into_par_iter()
            .map(|i| grid.in_shell(&grid.unflatten(i), BOUNDARY_SHELL))
            .collect();
        Monitor {
            gx: vec![0.0; grid.len()].into(),
            gy: vec![0.0; grid.len()].into(),
            shell,
            grid: Arc::clone(grid),
        }
    }

    fn record(&self, t: f64, u: &Field, ut: &Field) -> Result<Record> {
        let grid = &self.grid;
        let mut gx = self.gx.borrow_mut();
        let mut gy = self.gy.borrow_mut();
        horizontal_gradient_into(grid, u.values(), &mut gx, &mut gy)?;
        let (uv, tv, gx, gy) = (u.values(), ut.values(), &gx[..], &gy[..]);
        let l2_u = integrate_nodes(grid, |i, _, _| uv[i] * uv[i]).sqrt();
        let grad_sq = integrate_nodes(grid, |i, _, _| gx[i] * gx[i] + gy[i] * gy[i]);
        let ut_sq = integrate_nodes(grid, |i, _, _| tv[i] * tv[i]);
        let shell = &self.shell;
        let boundary_mass =
            integrate_nodes(grid, |i, _, _| if shell[i] { uv[i] * uv[i] } else { 0.0 }).sqrt();
        let weighted_energy = if check_weight(grid, 2.0, t).is_ok() {
            let e = 0.5
                * integrate_nodes(grid, |i, r2, tau| {
                    (2.0 * psi_raw(t, r2, tau)).exp() * (tv[i] * tv[i] + gx[i] * gx[i] + gy[i] * gy[i])
                });
            e.is_finite().then_some(e)
        } else {
            None
        };
        let linf_u = uv.par_iter().map(|v| v.abs()).reduce(|| 0.0, f64::max);
        Ok(Record {
            t,
            l2_u,
            l2_grad_u: grad_sq.sqrt(),
            l2_ut: ut_sq.sqrt(),
            linf_u,
            energy: 0.5 * (ut_sq + grad_sq),
            weighted_energy,
            boundary_mass,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample, Boundary};
    use ode_solvers::{Dopri5, System, Vector2};
    use rand::{Rng, SeedableRng};

    fn periodic(points: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::new(1, vec![1.0; 3], vec![points; 3], Boundary::Periodic).unwrap())
    }

    fn constant(g: &Arc<GridSpec>, c: f64) -> Field {
        sample(g, |_| c).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let g = GridSpec::h1_box([8.0, 8.0, 32.0], 0.25, Boundary::DirichletZero).unwrap();
        assert!((g.r_max() - 8.0 * 2f64.sqrt()).abs() < 1e-12);
        let dt = cfl_limit(&g).unwrap();
        let lambda: f64 = 64.0 + 64.0 + 128.0 * 16.0 + 2.0 * 8.0 * 2f64.sqrt() * 32.0;
        assert!((dt - 2.0 / lambda.sqrt()).abs() < 1e-15);
        // tiny box approximates the flat limit h / sqrt 2
        let g = GridSpec::new(1, vec![1e-6, 1e-6, 1e-6], vec![3, 3, 3], Boundary::Periodic).unwrap();
        let hh = g.spacing(0);
        assert!((cfl_limit(&g).unwrap() - hh / 2f64.sqrt()).abs() < 1e-3 * hh);
        let g = GridSpec::new(1, vec![1.0; 3], vec![3, 1, 3], Boundary::Periodic).unwrap();
        assert!(matches!(cfl_limit(&g), Err(Error::UnsupportedGrid(_))));
    }

    #[test]
    fn auto_dt_lands_on_t_end() {
        let g = Arc::new(GridSpec::h1_box([2.0, 2.0, 4.0], 0.25, Boundary::DirichletZero).unwrap());
        let (dt, n) = SolverConfig::linear(3.0).resolve(&g).unwrap();
        assert!((dt * n as f64 - 3.0).abs() < 1e-12);
        assert!(dt <= 0.9 * cfl_limit(&g).unwrap());
        let mut cfg = SolverConfig::linear(3.0);
        cfg.dt = TimeStep::Fixed(1.0);
        assert!(cfg.resolve(&g).is_err());
        cfg.record_every = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn init_state_examples() {
        let g = periodic(4);
        let z = Field::zeros(&g);
        let s = init_state(&z, &z, None, 0.01).unwrap();
        assert!(s.u_curr.values().iter().all(|v| *v == 0.0));
        let s = init_state(&constant(&g, 1.0), &z, None, 0.01).unwrap();
        assert!(s.u_curr.values().iter().all(|v| *v == 1.0));
        let (c, dt) = (0.7, 0.01);
        let s = init_state(&z, &constant(&g, c), None, dt).unwrap();
        let exact = c * (1.0 - (-dt as f64).exp());
        for v in s.u_curr.values() {
            assert!((v - (c * dt - c * dt * dt / 2.0)).abs() < 1e-16);
            assert!((v - exact).abs() < c * dt.powi(3));
        }
        let other = periodic(5);
        assert!(init_state(&z, &Field::zeros(&other), None, dt).is_err());
    }

    fn constant_trajectory(dt: f64, t_end: f64, u0: f64, u1: f64) -> f64 {
        let g = periodic(4);
        let mut s = init_state(&constant(&g, u0), &constant(&g, u1), None, dt).unwrap();
        let exact = |t: f64| u0 + u1 * (1.0 - (-t).exp());
        let mut err: f64 = (s.u_curr.values()[0] - exact(s.t)).abs();
        let steps = (t_end / dt).round() as u64;
        while s.step < steps {
            step(&mut s, None).unwrap();
            let v = s.u_curr.values();
            let spread = v.iter().fold(0.0f64, |m, x| m.max((x - v[0]).abs()));
            assert!(spread < 1e-12);
            err = err.max((v[0] - exact(s.t)).abs());
        }
        err
    }

    #[test]
    fn constant_linear_matches_ode_and_converges() {
        assert!(constant_trajectory(1e-3, 10.0, 0.3, 1.0) < 1e-4);
        let e: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| constant_trajectory(dt, 10.0, 0.3, 1.0)).collect();
        let order = (e[0] / e[2]).log2() / 2.0;
        assert!(order >= 1.8, "{e:?}");
    }

    struct Reduced {
        p: f64,
    }

    impl System<f64, Vector2<f64>> for Reduced {
        fn system(&self, _t: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
            dy[0] = y[1];
            dy[1] = y[0].abs().powf(self.p) - y[1];
        }
        fn solout(&mut self, _t: f64, y: &Vector2<f64>, _dy: &Vector2<f64>) -> bool {
            y[0].abs() > 2e3
        }
    }

    #[test]
    fn constant_semilinear_matches_adaptive_ode() {
        let (p, dt, out) = (1.3, 1e-3, 0.01);
        let mut ode = Dopri5::new(Reduced { p }, 0.0, 40.0, out, Vector2::new(1.0, 1.0), 1e-12, 1e-12);
        ode.integrate().unwrap();
        let (ts, ys) = (ode.x_out(), ode.y_out());

        let g = periodic(3);
        let one = constant(&g, 1.0);
        let mut s = init_state(&one, &one, Some(p), dt).unwrap();
        let stride = (out / dt).round() as u64;
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for (t, y) in ts.iter().zip(ys).skip(1) {
            if y[0].abs() > 1e3 {
                break;
            }
            while s.step < (t / out).round() as u64 * stride {
                step(&mut s, Some(p)).unwrap();
            }
            assert!((s.t - t).abs() < 1e-9);
            worst = worst.max((s.u_curr.values()[0] - y[0]).abs() / y[0].abs());
            checked += 1;
        }
        assert!(checked > 100, "{checked}");
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn undamped_core_is_reversible() {
        let g = Arc::new(GridSpec::h1_box([2.0, 2.0, 2.0], 0.25, Boundary::Periodic).unwrap());
        let u0 = sample(&g, |eta| {
            let pi = std::f64::consts::PI;
            (pi * eta.x[0] / 2.0).sin() * (pi * eta.y[0] / 2.0).cos() + (pi * eta.tau).cos()
        })
        .unwrap();
        let dt = 0.5 * cfl_limit(&g).unwrap();
        let mut s = init_state(&u0, &Field::zeros(&g), None, dt).unwrap();
        let start = s.u_prev.clone();
        for _ in 0..200 {
            step_undamped(&mut s).unwrap();
        }
        reverse(&mut s);
        for _ in 0..200 {
            step_undamped(&mut s).unwrap();
        }
        let err = s
            .u_curr
            .values()
            .iter()
            .zip(start.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn linear_energy_stays_bounded_at_cfl() {
        let g = Arc::new(GridSpec::new(1, vec![1.0; 3], vec![8, 8, 8], Boundary::Periodic).unwrap());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let modes: Vec<[f64; 4]> = (0..6)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(1..3) as f64, rng.gen_range(1..3) as f64, rng.gen_range(1..3) as f64])
            .collect();
        let pi = std::f64::consts::PI;
        let u0 = sample(&g, |eta| {
            modes
                .iter()
                .map(|m| m[0] * (pi * (m[1] * eta.x[0] + m[2] * eta.y[0] + m[3] * eta.tau)).sin())
                .sum()
        })
        .unwrap();
        let mut cfg = SolverConfig::linear(1.0);
        let (dt0, _) = cfg.resolve(&g).unwrap();
        cfg.dt = TimeStep::Fixed(0.9 * cfl_limit(&g).unwrap());
        assert!(dt0 <= 0.9 * cfl_limit(&g).unwrap() + 1e-15);
        let n_steps = 10_000u64;
        cfg.t_end = n_steps as f64 * 0.9 * cfl_limit(&g).unwrap();
        cfg.record_every = 100;
        let out = run(&u0, &Field::zeros(&g), &cfg).unwrap();
        assert_eq!(out.status, RunStatus::Completed);
        let e = out.series.column(crate::diagnostics::Column::Energy).unwrap();
        let peak = e.iter().cloned().fold(0.0, f64::max);
        assert!(peak <= 1.5 * e[0], "{peak} vs {}", e[0]);
        // geometric-mean growth per step after the first recorded interval
        let growth = (e[e.len() - 1] / e[1]).powf(1.0 / (n_steps - 100) as f64);
        assert!(growth <= 1.0 + 1e-10, "{growth}");
    }

    #[test]
    fn zero_data_completes_with_zero_series() {
        let g = Arc::new(GridSpec::h1_box([1.0, 1.0, 2.0], 0.25, Boundary::DirichletZero).unwrap());
        let z = Field::zeros(&g);
        let mut cfg = SolverConfig::semilinear(1.5, 1.0);
        cfg.record_every = 3;
        cfg.snapshot_times = vec![0.0, 0.5];
        let out = run(&z, &z, &cfg).unwrap();
        assert_eq!(out.status, RunStatus::Completed);
        assert!(out.t_blowup.is_none());
        assert!((out.series.last().unwrap().t - 1.0).abs() < 1e-12);
        for r in out.series.rows() {
            assert_eq!([r.l2_u, r.l2_grad_u, r.l2_ut, r.linf_u, r.energy, r.boundary_mass], [0.0; 6]);
            assert_eq!(r.weighted_energy, Some(0.0));
        }
        assert_eq!(out.snapshots.len(), 2);
        assert_eq!(out.snapshots[0].t, 0.0);
        assert!(out.snapshots[1].t >= 0.5);
    }

    #[test]
    fn constant_blow_up_is_detected() {
        let g = periodic(3);
        let one = constant(&g, 1.0);
        let mut cfg = SolverConfig::semilinear(2.0, 50.0);
        cfg.dt = TimeStep::Fixed(1e-3);
        cfg.record_every = 100;
        let out = run(&one, &one, &cfg).unwrap();
        assert_eq!(out.status, RunStatus::BlewUp);
        let tb = out.t_blowup.unwrap();
        assert!(tb > 0.5 && tb < 10.0, "{tb}");
        // linear runs never report blow-up
        let mut cfg = SolverConfig::linear(2.0);
        cfg.blowup_threshold = 0.5;
        let out = run(&one, &one, &cfg).unwrap();
        assert_eq!(out.status, RunStatus::NumericFailure);
        assert!(out.t_blowup.is_none());
    }
}
