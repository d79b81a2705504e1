use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{CertificateSource, ExperimentConfig, InequalitySelector};
use super::data::{build_data, build_grid, Expression};
use super::params;
use super::report::ExperimentReport;
use crate::certificate::{
    certificate_sweep, measure_d_r, phi_r_derivative_bounds, separable_unit_functional, BumpProfile,
    CertificateAccumulator, CertificateReport, MIN_TIME_SAMPLES,
};
use crate::diagnostics::{gn_ratio, weighted_gn_check};
use crate::error::{Error, Result};
use crate::geometry::{gaussian_weight_integral, psi_raw, GroupPoint};
use crate::grid::snapshot::read_snapshot;
use crate::grid::{gaussian_weight_quadrature, l1_l2_embedding_check, sample, Field, GridSpec};

pub const GAUSSIAN_REL_TOL: f64 = 1e-2;
pub const SCALE_INVARIANCE_TOL: f64 = 1e-10;
pub const CONSTANT_SPREAD_LIMIT: f64 = 10.0;

/// `e^{-a psi(0)}` times a smooth cutoff inside 90% of the box, `a` spread over `[1.5, 3]`.
pub fn gaussian_family(grid: &Arc<GridSpec>, size: usize) -> Result<Vec<Field>> {
    let hw = grid.half_widths().to_vec();
    let n = grid.n();
    (0..size)
        .map(|k| {
            let a = if size == 1 { 2.0 } else { 1.5 + 1.5 * k as f64 / (size - 1) as f64 };
            let hw = hw.clone();
            sample(grid, move |eta: &GroupPoint| {
                let mut r = (eta.tau / (0.9 * hw[2 * n])).powi(2);
                for i in 0..n {
                    r += (eta.x[i] / (0.9 * hw[i])).powi(2) + (eta.y[i] / (0.9 * hw[n + i])).powi(2);
                }
                let cut = if r >= 1.0 { 0.0 } else { (1.0 - 1.0 / (1.0 - r)).exp() };
                (-a * psi_raw(0.0, eta.horizontal_sq(), eta.tau)).exp() * cut
            })
        })
        .collect()
}

fn list_or(v: &[f64], default: f64) -> Vec<f64> {
    if v.is_empty() {
        vec![default]
    } else {
        v.to_vec()
    }
}

pub(super) fn inequality(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let params = params(cfg)?;
    let grid = build_grid(cfg)?;
    let e = &cfg.experiment;
    let selector = e
        .selector
        .ok_or_else(|| Error::Config("experiment.selector is required".into()))?;
    match selector {
        InequalitySelector::Gaussian => {
            let mut rows = Vec::new();
            for &sigma in &list_or(&e.sigma, 1.0) {
                for &t in &list_or(&e.times, 0.0) {
                    let q = gaussian_weight_quadrature(&grid, sigma, t)?;
                    let exact = gaussian_weight_integral(&params, sigma, t);
                    let rel = (q - exact).abs() / exact;
                    report.check(
                        &format!("gaussian integral sigma={sigma} t={t}"),
                        q,
                        format!("{exact} within {GAUSSIAN_REL_TOL}"),
                        rel <= GAUSSIAN_REL_TOL,
                    );
                    rows.push(serde_json::json!({"sigma": sigma, "t": t, "quadrature": q, "closed_form": exact, "relative_error": rel}));
                }
            }
            report.metric("gaussian", rows);
        }
        InequalitySelector::Gn => {
            let q = e.q.unwrap_or(3.0);
            let family = gaussian_family(&grid, e.family_size.unwrap_or(10))?;
            let mut ratios = Vec::new();
            let mut worst: f64 = 0.0;
            for v in &family {
                let r = gn_ratio(v, q, &params)?;
                let rs = gn_ratio(&v.scaled(7.3), q, &params)?;
                worst = worst.max((r - rs).abs() / r);
                ratios.push(r);
            }
            report.check(
                "gn ratio scale invariance",
                worst,
                format!("<= {SCALE_INVARIANCE_TOL}"),
                worst <= SCALE_INVARIANCE_TOL,
            );
            report.metric("q", q);
            report.metric("gn_ratios", ratios);
        }
        InequalitySelector::WeightedGn => {
            let q = e.q.unwrap_or(3.0);
            let sigma = list_or(&e.sigma, 1.0)[0];
            let t = list_or(&e.times, 0.0)[0];
            let family = gaussian_family(&grid, e.family_size.unwrap_or(10))?;
            let checks = family
                .iter()
                .map(|v| weighted_gn_check(v, sigma, t, q, &params))
                .collect::<Result<Vec<_>>>()?;
            let failures = checks.iter().filter(|c| !c.holds_poincare).count();
            report.check(
                "weighted Poincare estimate failures",
                failures as f64,
                "0",
                failures == 0,
            );
            let consts: Vec<f64> = checks.iter().map(|c| c.constant_gn).collect();
            let max = consts.iter().cloned().fold(0.0, f64::max);
            let min = consts.iter().cloned().fold(f64::INFINITY, f64::min);
            let spread = if min > 0.0 { max / min } else { f64::INFINITY };
            report.check(
                "weighted GN constant spread",
                spread,
                format!("< {CONSTANT_SPREAD_LIMIT}"),
                spread < CONSTANT_SPREAD_LIMIT,
            );
            report.metric("checks", checks);
        }
        InequalitySelector::L1l2 => {
            let sigma = list_or(&e.sigma, 1.0)[0];
            let t = list_or(&e.times, 0.0)[0];
            let count = e.family_size.unwrap_or(100);
            let mut rng = ChaCha8Rng::seed_from_u64(e.seed.unwrap_or(0));
            let mut failures = 0usize;
            let mut max_ratio: f64 = 0.0;
            for _ in 0..count {
                let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v = Field::from_values(&grid, values)?;
                let c = l1_l2_embedding_check(&v, sigma, t)?;
                failures += usize::from(!c.holds);
                max_ratio = max_ratio.max(c.lhs / c.rhs);
            }
            report.check("l1-l2 embedding failures", failures as f64, "0", failures == 0);
            report.metric("fields", count);
            report.metric("max_lhs_over_rhs", max_ratio);
        }
    }
    Ok(())
}

/// Smallest `s` with `u0 + u1` vanishing outside `D_s`.
fn data_scale(sum: &Field) -> f64 {
    let grid = sum.grid();
    sum.values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| {
            let eta = grid.point_at(i);
            let xn = eta.x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let yn = eta.y.iter().map(|v| v * v).sum::<f64>().sqrt();
            xn.max(yn).max(eta.tau.abs().sqrt())
        })
        .fold(0.0, f64::max)
}

fn load_snapshots(dir: &Path, grid: &GridSpec) -> Result<Vec<(f64, Field)>> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| Error::Config(format!("snapshot_dir {}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    paths.sort();
    let mut levels = Vec::with_capacity(paths.len());
    for p in paths {
        let (field, t) = read_snapshot(BufReader::new(File::open(&p)?), grid.boundary())?;
        if field.grid().as_ref() != grid {
            return Err(Error::invalid(format!("snapshot {} has a different grid", p.display())));
        }
        levels.push((t, field));
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    if levels.is_empty() {
        return Err(Error::invalid(format!("no snapshots found in {}", dir.display())));
    }
    Ok(levels)
}

pub(super) fn certificate(cfg: &ExperimentConfig, out_dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let e = &cfg.experiment;
    let p = e
        .certificate_p
        .or(cfg.solver.p)
        .ok_or_else(|| Error::Config("certificate needs experiment.certificate_p or solver.p".into()))?;
    let params = params(cfg)?;
    let grid = build_grid(cfg)?;
    let (u0, u1) = build_data(&grid, &cfg.data, cfg.data.amplitude)?;
    let radii = &e.radii;
    let source = e.source.unwrap_or(CertificateSource::Run);
    let mut unit_field = false;
    let mut times = Vec::new();
    let cert: CertificateReport = match source {
        CertificateSource::Run => {
            let solver = cfg.solver.to_solver_config(Some(p), cfg.solver.t_end)?;
            let (out, cert) = certificate_sweep(&u0, &u1, &solver, radii)?;
            report.metric("run_status", out.status);
            report.metric("t_blowup", out.t_blowup);
            report.metric("t_final", out.t_final);
            cert
        }
        CertificateSource::Snapshots => {
            let dir = e
                .snapshot_dir
                .as_ref()
                .ok_or_else(|| Error::Config("source = \"snapshots\" needs experiment.snapshot_dir".into()))?;
            let levels = load_snapshots(dir, &grid)?;
            let mut acc = CertificateAccumulator::new(&u0, &u1, p, radii)?;
            for (t, f) in &levels {
                acc.observe(*t, f)?;
            }
            report.metric("snapshots", levels.len());
            acc.finish()?
        }
        CertificateSource::Analytic => {
            let expr = Expression::parse(
                e.analytic
                    .as_deref()
                    .ok_or_else(|| Error::Config("source = \"analytic\" needs experiment.analytic".into()))?,
            )?;
            let t_max = radii.iter().map(|r| r * r).fold(0.0, f64::max);
            let r_min = radii.iter().cloned().fold(f64::INFINITY, f64::min);
            let dt = e.analytic_dt.unwrap_or(r_min * r_min / (2 * MIN_TIME_SAMPLES) as f64);
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("experiment.analytic_dt must be positive, got {dt}")));
            }
            let levels = (t_max / dt).ceil() as usize;
            let mut acc = CertificateAccumulator::new(&u0, &u1, p, radii)?;
            for k in 0..=levels {
                let t = (k as f64 * dt).min(t_max);
                let f = expr.sample(&grid, t)?;
                if k == 0 {
                    unit_field = f.values().iter().all(|v| *v == 1.0);
                }
                acc.observe(t, &f)?;
                times.push(t);
                if t >= t_max {
                    break;
                }
            }
            acc.finish()?
        }
    };
    cert.write_csv(BufWriter::new(File::create(out_dir.join("certificate.csv"))?))?;
    report.outputs.push("certificate.csv".into());

    let q = params.homogeneous_dim() as i32;
    let m = measure_d_r(2.0, cfg.group.n) / measure_d_r(1.0, cfg.group.n);
    report.check("measure ratio D_2R / D_R", m, format!("{}", 2f64.powi(q)), m == 2f64.powi(q));
    let exponent = cert.exponent;
    let sign = if exponent.abs() < 1e-12 {
        "zero"
    } else if exponent < 0.0 {
        "negative"
    } else {
        "positive"
    };
    report.metric("exponent", exponent);
    report.metric("exponent_sign", sign);

    let sum = u0.zip_map(&u1, |a, b| a + b)?;
    let scale = data_scale(&sum);
    let inside: Vec<f64> = cert.rows.iter().filter(|r| r.r >= 2.0 * scale).map(|r| r.j_r).collect();
    if inside.len() >= 2 {
        let spread = inside.iter().map(|j| (j - inside[0]).abs()).fold(0.0, f64::max);
        report.check(
            "J_R constant once data lie in D_{R/2}",
            spread,
            "0",
            spread <= 1e-12 * inside[0].abs().max(f64::MIN_POSITIVE),
        );
    }
    if p <= params.p_fujita_f64() + 1e-12 && cert.rows.iter().any(|r| r.i_r > 0.0) {
        report.check(
            "ratio nondecreasing in R",
            f64::from(u8::from(cert.ratio_nondecreasing)),
            "1",
            cert.ratio_nondecreasing,
        );
    }
    if unit_field {
        let worst = cert
            .rows
            .iter()
            .map(|r| {
                let sep = separable_unit_functional(&grid, r.r, &times);
                (r.i_r - sep).abs() / sep
            })
            .fold(0.0, f64::max);
        report.check("separable quadrature agreement", worst, "<= 1e-6", worst <= 1e-6);
    }
    if cfg.group.n == 1 {
        let b = phi_r_derivative_bounds(radii[0], &BumpProfile::new(p)?, 64)?;
        report.metric("derivative_bounds", b);
    }
    report.metric("data_scale", scale);
    report.metric("rows", &cert.rows);
    report.metric("ratio_nondecreasing", cert.ratio_nondecreasing);
    Ok(())
}
