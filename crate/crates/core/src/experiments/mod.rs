//! Config-driven experiments writing CSV series and a JSON report.

mod config;
mod data;
mod probes;
mod report;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    CertificateSource, DataKind, DataSection, DtSetting, ExperimentConfig, ExperimentName, ExperimentSection,
    GridSection, GroupSection, InequalitySelector, SolverSection,
};
pub use data::{build_data, build_grid, Expression};
pub use report::{config_hash, Check, ExperimentReport, ReportStatus};

use crate::diagnostics::{
    fit_decay, weighted_energy_monotonicity, write_fit_csv, Column, FitRow, TimeSeries, MONOTONICITY_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::HeisenbergParams;
use crate::grid::snapshot::write_snapshot;
use crate::solver::{run, RunOutcome, RunStatus};

pub const DECAY_SLOPE_TOL: f64 = 0.25;
pub const DECAY_MIN_R2: f64 = 0.98;
/// Boundary mass allowed during a decay run, relative to the initial `l2_u`.
pub const BOUNDARY_MASS_FRACTION: f64 = 1e-3;
pub const DEFAULT_FIT_WINDOW: [f64; 2] = [10.0, 40.0];

/// Parse, run and write `report.json` plus the experiment's CSV files into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    std::fs::create_dir_all(out_dir)?;
    let resolved = cfg.to_toml()?;
    let mut report = ExperimentReport::new(cfg.experiment.name.as_str(), resolved);
    match cfg.experiment.name {
        ExperimentName::Simulate => simulate(cfg, out_dir, &mut report)?,
        ExperimentName::Decay => decay(cfg, out_dir, &mut report)?,
        ExperimentName::Sweep => sweep(cfg, out_dir, &mut report)?,
        ExperimentName::Inequality => probes::inequality(cfg, &mut report)?,
        ExperimentName::Certificate => probes::certificate(cfg, out_dir, &mut report)?,
    }
    report.settle();
    report.write_json(&out_dir.join("report.json"))?;
    report.outputs.push("report.json".into());
    Ok(report)
}

fn params(cfg: &ExperimentConfig) -> Result<HeisenbergParams> {
    HeisenbergParams::new(cfg.group.n).map_err(|e| Error::Config(e.to_string()))
}

/// Box-size guidance for a run of length `t_end`.
fn box_warnings(cfg: &ExperimentConfig, p: Option<f64>, t_end: f64, report: &mut ExperimentReport) -> Result<()> {
    let params = params(cfg)?;
    if let Some(p) = p {
        let p_gn = params.p_gn_f64();
        if p > p_gn {
            report.warn(format!(
                "p = {p} exceeds the Gagliardo-Nirenberg exponent {p_gn} for n = {}; the small-data theory does not cover it",
                cfg.group.n
            ));
        }
    }
    let n = cfg.group.n;
    let hw = &cfg.grid.half_widths;
    if cfg.grid.boundary == crate::grid::Boundary::Periodic {
        return Ok(());
    }
    if let Some((rho, tau_extent)) = data::support_radius(&cfg.data) {
        let l = hw[..2 * n].iter().cloned().fold(f64::INFINITY, f64::min);
        let reach = 0.9 * (l - rho);
        if t_end > reach {
            report.warn(format!(
                "t_end = {t_end} exceeds {reach:.3}, the time for unit-speed waves from the data support to reach the horizontal boundary (with a 10% margin)"
            ));
        }
        let r_max = hw[..2 * n].iter().map(|v| v * v).sum::<f64>().sqrt();
        let l_tau = hw[2 * n];
        if 0.5 * r_max * t_end > 0.9 * (l_tau - tau_extent) {
            report.warn(format!(
                "r_max/2 * t_end = {:.3} exceeds the vertical margin {:.3}",
                0.5 * r_max * t_end,
                0.9 * (l_tau - tau_extent)
            ));
        }
    }
    Ok(())
}

fn write_series(out_dir: &Path, name: &str, series: &TimeSeries, report: &mut ExperimentReport) -> Result<()> {
    series.write_csv(BufWriter::new(File::create(out_dir.join(name))?))?;
    report.outputs.push(name.to_string());
    Ok(())
}

fn run_metrics(out: &RunOutcome, report: &mut ExperimentReport) {
    report.metric("status", out.status);
    report.metric("t_blowup", out.t_blowup);
    report.metric("dt", out.dt);
    report.metric("steps", out.steps);
    report.metric("t_final", out.t_final);
    report.metric("rows", out.series.len());
    report.metric("initial_l2_u", out.series.first().map(|r| r.l2_u));
    report.metric("final_l2_u", out.series.last().map(|r| r.l2_u));
    report.metric(
        "max_boundary_mass",
        out.series.rows().iter().map(|r| r.boundary_mass).fold(0.0, f64::max),
    );
    if let Some(f) = &out.failure {
        report.metric("failure", f);
    }
    if out.status == RunStatus::NumericFailure {
        report.status = ReportStatus::NumericFailure;
    }
}

fn simulate(cfg: &ExperimentConfig, out_dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let grid = build_grid(cfg)?;
    let (u0, u1) = build_data(&grid, &cfg.data, cfg.data.amplitude)?;
    let solver = cfg.solver.to_solver_config(cfg.solver.p, cfg.solver.t_end)?;
    box_warnings(cfg, cfg.solver.p, solver.t_end, report)?;
    let out = run(&u0, &u1, &solver)?;
    write_series(out_dir, "series.csv", &out.series, report)?;
    for (k, s) in out.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:04}.bin");
        write_snapshot(BufWriter::new(File::create(out_dir.join(&name))?), &s.field, s.t)?;
        report.outputs.push(name);
    }
    run_metrics(&out, report);
    Ok(())
}

fn decay(cfg: &ExperimentConfig, out_dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let params = params(cfg)?;
    let windows = if cfg.experiment.fit_windows.is_empty() {
        vec![DEFAULT_FIT_WINDOW]
    } else {
        cfg.experiment.fit_windows.clone()
    };
    for w in &windows {
        if w[0] < 1.0 {
            report.warn(format!("fit window starting at t = {} is transient-dominated", w[0]));
        }
    }
    let mut out = None;
    let series = match &cfg.experiment.series_csv {
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::Config(format!("series_csv {}: {e}", path.display())))?;
            report.metric("mode", "synthetic");
            TimeSeries::read_csv(std::io::BufReader::new(file))?
        }
        None => {
            if cfg.solver.p.is_some() {
                return Err(Error::Config("the decay experiment needs a linear run (omit solver.p)".into()));
            }
            let grid = build_grid(cfg)?;
            let (u0, u1) = build_data(&grid, &cfg.data, cfg.data.amplitude)?;
            let solver = cfg.solver.to_solver_config(None, cfg.solver.t_end)?;
            box_warnings(cfg, None, solver.t_end, report)?;
            let o = run(&u0, &u1, &solver)?;
            write_series(out_dir, "series.csv", &o.series, report)?;
            run_metrics(&o, report);
            report.metric("mode", "simulated");
            let s = o.series.clone();
            out = Some(o);
            s
        }
    };
    if report.status == ReportStatus::NumericFailure {
        return Ok(());
    }

    let targets = params.decay_targets();
    let columns = [Column::L2U, Column::L2GradU, Column::L2Ut];
    let mut rows = Vec::new();
    for w in &windows {
        for (c, target) in columns.iter().zip(targets) {
            let fit = fit_decay(&series, *c, (w[0], w[1]))?;
            rows.push(FitRow::new(*c, &fit, target));
        }
    }
    write_fit_csv(BufWriter::new(File::create(out_dir.join("fits.csv"))?), &rows)?;
    report.outputs.push("fits.csv".into());

    if out.is_some() {
        let initial = series.first().map_or(0.0, |r| r.l2_u);
        let max_boundary = series.rows().iter().map(|r| r.boundary_mass).fold(0.0, f64::max);
        let limit = BOUNDARY_MASS_FRACTION * initial;
        report.metric("boundary_mass_limit", limit);
        if max_boundary >= limit {
            report.status = ReportStatus::Invalid;
            report.warn(format!(
                "boundary mass {max_boundary:.3e} reached the limit {limit:.3e}; the box is too small for these fit windows"
            ));
        }
    }
    for r in &rows {
        let name = format!("{}[{},{}]", r.column, r.window_lo, r.window_hi);
        report.check(
            &format!("slope {name}"),
            r.slope,
            format!("{} +- {DECAY_SLOPE_TOL}", r.target_slope),
            (r.slope - r.target_slope).abs() <= DECAY_SLOPE_TOL,
        );
        report.check(&format!("r2 {name}"), r.r2, format!(">= {DECAY_MIN_R2}"), r.r2 >= DECAY_MIN_R2);
    }
    if series.column(Column::WeightedEnergy).is_some() && series.len() > 1 {
        let m = weighted_energy_monotonicity(&series, MONOTONICITY_TOL)?;
        report.check(
            "weighted energy max relative increase",
            m.max_relative_increase,
            format!("<= {MONOTONICITY_TOL}"),
            m.holds,
        );
    }
    report.metric("fits", &rows);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub amplitude: f64,
    pub side: &'static str,
    pub status: RunStatus,
    pub t_blowup: Option<f64>,
    pub initial_l2_u: f64,
    pub final_l2_u: f64,
    pub t_final: f64,
}

/// The empirical threshold: largest blown-up `p` and smallest decaying `p`.
pub fn threshold_bracket(rows: &[SweepRow]) -> (Option<f64>, Option<f64>) {
    let lo = rows
        .iter()
        .filter(|r| r.status == RunStatus::BlewUp)
        .map(|r| r.p)
        .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))));
    let hi = rows
        .iter()
        .filter(|r| r.status == RunStatus::Completed && r.final_l2_u < r.initial_l2_u)
        .map(|r| r.p)
        .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.min(p))));
    (lo, hi)
}

fn sweep(cfg: &ExperimentConfig, out_dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let params = params(cfg)?;
    let e = &cfg.experiment;
    let t_global = cfg.solver.t_end;
    let t_blow = e.blowup_t_end.unwrap_or(t_global);
    let mut cells: Vec<(f64, f64, &'static str, f64)> = Vec::new();
    let a_blow = e.blowup_amplitude.unwrap_or(1.0);
    let a_global = e.global_amplitude.unwrap_or(0.01);
    cells.extend(e.blowup_p.iter().map(|&p| (p, a_blow, "blowup", t_blow)));
    cells.extend(e.global_p.iter().map(|&p| (p, a_global, "global", t_global)));
    if cells.is_empty() {
        return Err(Error::Config("sweep needs experiment.blowup_p or experiment.global_p".into()));
    }
    for &(p, ..) in &cells {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("sweep exponent {p} must exceed 1")));
        }
    }
    for &(p, _, _, t) in &cells {
        box_warnings(cfg, Some(p), t, report)?;
    }
    let mut seen = std::collections::HashSet::new();
    report.warnings.retain(|w| seen.insert(w.clone()));
    let grid = build_grid(cfg)?;
    let (base0, base1) = build_data(&grid, &cfg.data, 1.0)?;
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(p, a, side, t_end)| {
            let solver = cfg.solver.to_solver_config(Some(p), t_end)?;
            let out = run(&base0.scaled(a), &base1.scaled(a), &solver)?;
            Ok(SweepRow {
                p,
                amplitude: a,
                side,
                status: out.status,
                t_blowup: out.t_blowup,
                initial_l2_u: out.series.first().map_or(0.0, |r| r.l2_u),
                final_l2_u: out.series.last().map_or(0.0, |r| r.l2_u),
                t_final: out.t_final,
            })
        })
        .collect::<Result<_>>()?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out_dir.join("sweep.csv"))?));
    w.write_record(["p", "amplitude", "side", "status", "t_blowup", "initial_l2_u", "final_l2_u", "t_final"])
        .map_err(crate::diagnostics::series::csv_err)?;
    for r in &rows {
        w.write_record([
            r.p.to_string(),
            r.amplitude.to_string(),
            r.side.to_string(),
            r.status.to_string(),
            r.t_blowup.map_or(String::new(), |t| t.to_string()),
            r.initial_l2_u.to_string(),
            r.final_l2_u.to_string(),
            r.t_final.to_string(),
        ])
        .map_err(crate::diagnostics::series::csv_err)?;
    }
    w.flush()?;
    report.outputs.push("sweep.csv".into());

    for r in &rows {
        if r.side == "blowup" {
            let t = r.t_blowup.unwrap_or(f64::INFINITY);
            report.check(
                &format!("blow-up p={} A={}", r.p, r.amplitude),
                t,
                format!("blew_up before t = {t_blow}"),
                r.status == RunStatus::BlewUp && t < t_blow,
            );
        } else {
            report.check(
                &format!("global p={} A={}", r.p, r.amplitude),
                r.final_l2_u / r.initial_l2_u.max(f64::MIN_POSITIVE),
                format!("completed t = {t_global} with final/initial l2_u < 1"),
                r.status == RunStatus::Completed && r.final_l2_u < r.initial_l2_u,
            );
        }
    }
    let (lo, hi) = threshold_bracket(&rows);
    let p_f = params.p_fujita_f64();
    report.metric("bracket_lo", lo);
    report.metric("bracket_hi", hi);
    report.metric("p_fujita", p_f);
    if let (Some(lo), Some(hi)) = (lo, hi) {
        report.check(
            "bracket contains p_F",
            p_f,
            format!("[{lo}, {hi}]"),
            lo <= p_f && p_f <= hi && lo < hi,
        );
    }
    report.metric("cells", &rows);
    Ok(())
}
