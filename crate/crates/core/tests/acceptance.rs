//! One line per acceptance criterion. Exits nonzero only on an unexpected failure.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use hwave_core::diagnostics::{fit_decay, weighted_energy_monotonicity, Column, MONOTONICITY_TOL};
use hwave_core::experiments::{run_experiment, ExperimentConfig, ExperimentReport, ReportStatus};
use hwave_core::geometry::symbolic::{sublaplacian_symbolic, Var};
use hwave_core::geometry::{derived_exponents, HeisenbergParams, Polynomial};
use hwave_core::grid::{apply_sublaplacian, gaussian_weight_quadrature, sample, Boundary, GridSpec};
use hwave_core::solver::{init_state, step};
use ode_solvers::{Dopri5, System, Vector2};

const DECAY: &str = include_str!("../../../configs/decay.toml");
const SWEEP: &str = include_str!("../../../configs/sweep.toml");
const CERTIFICATE: &str = include_str!("../../../configs/certificate.toml");

#[derive(Clone, Copy, PartialEq)]
enum Verdict {
    Pass,
    Fail,
    /// Fails for a reason analysed in the decisions ledger.
    KnownFail,
    /// The run violated its own validity gate.
    Invalid,
}

struct Line {
    id: u8,
    name: &'static str,
    verdict: Verdict,
    detail: String,
    seconds: f64,
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

fn experiment(text: &str, out: &Path) -> ExperimentReport {
    let cfg = ExperimentConfig::from_toml(text).expect("acceptance config parses");
    run_experiment(&cfg, out).expect("experiment runs")
}

fn check<'a>(rep: &'a ExperimentReport, prefix: &str) -> Vec<&'a hwave_core::experiments::Check> {
    rep.checks.iter().filter(|c| c.name.starts_with(prefix)).collect()
}

fn gaussian() -> (Verdict, String) {
    let p = derived_exponents(1).unwrap();
    let g = GridSpec::h1_box([8.0, 8.0, 32.0], 0.25, Boundary::DirichletZero).unwrap();
    let cases = [(1.0, 0.0, 32.0 * PI), (2.0, 0.0, 8.0 * PI), (1.0, 1.0, 128.0 * PI)];
    let mut detail = Vec::new();
    let mut stated_ok = true;
    let mut corrected_ok = true;
    for (sigma, t, stated) in cases {
        let q = gaussian_weight_quadrature(&g, sigma, t).unwrap();
        let exact = hwave_core::geometry::gaussian_weight_integral(&p, sigma, t);
        stated_ok &= rel(q, stated) <= 1e-2;
        corrected_ok &= rel(q, exact) <= 1e-2;
        detail.push(format!(
            "s={sigma},t={t}: {q:.4} vs stated {stated:.4} (rel {:.3}), closed form {exact:.4} (rel {:.1e})",
            rel(q, stated),
            rel(q, exact)
        ));
    }
    let v = match (stated_ok, corrected_ok) {
        (true, _) => Verdict::Pass,
        (false, true) => Verdict::KnownFail,
        (false, false) => Verdict::Fail,
    };
    (v, detail.join("; "))
}

fn stencil_order() -> (Verdict, String) {
    let params = derived_exponents(1).unwrap();
    let m = |pw: &[(Var, u32)]| Polynomial::monomial(1, 1.0, pw);
    let mut detail = Vec::new();
    let mut ok = true;
    let exact_cases = [
        ("x^2", m(&[(Var::X(0), 2)])),
        ("tau^2", m(&[(Var::Tau, 2)])),
        ("x tau", m(&[(Var::X(0), 1), (Var::Tau, 1)])),
        ("x^2 y", m(&[(Var::X(0), 2), (Var::Y(0), 1)])),
    ];
    for (name, poly) in exact_cases {
        let err = interior_error(&poly, &params, 0.2);
        ok &= err < 1e-10;
        detail.push(format!("{name} err {err:.1e}"));
    }
    let quartic = m(&[(Var::X(0), 1), (Var::Tau, 3)]) + m(&[(Var::X(0), 2), (Var::Tau, 2)]);
    let errs: Vec<f64> = [0.4, 0.2, 0.1].iter().map(|&h| interior_error(&quartic, &params, h)).collect();
    let order = (errs[0] / errs[2]).log2() / 2.0;
    ok &= order >= 1.8;
    detail.push(format!("quartic errors {:.2e} {:.2e} {:.2e} order {order:.3} (>= 1.8)", errs[0], errs[1], errs[2]));
    (verdict(ok), detail.join("; "))
}

/// Max error on |x|, |y|, |tau| <= 0.8 inside the box [-2, 2]^3, away from the zeroed boundary.
fn interior_error(poly: &Polynomial, params: &HeisenbergParams, h: f64) -> f64 {
    let exact = sublaplacian_symbolic(poly, params).unwrap();
    let g = Arc::new(GridSpec::h1_box([2.0, 2.0, 2.0], h, Boundary::DirichletZero).unwrap());
    let u = sample(&g, |eta| poly.eval(eta)).unwrap();
    let lap = apply_sublaplacian(&u).unwrap();
    (0..g.len())
        .map(|i| g.point_at(i))
        .enumerate()
        .filter(|(_, e)| e.x[0].abs() <= 0.8 + 1e-9 && e.y[0].abs() <= 0.8 + 1e-9 && e.tau.abs() <= 0.8 + 1e-9)
        .map(|(i, e)| (lap.values()[i] - exact.eval(&e)).abs())
        .fold(0.0, f64::max)
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

fn ode_reduction() -> (Verdict, String) {
    let g = Arc::new(GridSpec::new(1, vec![1.0; 3], vec![4; 3], Boundary::Periodic).unwrap());
    let c = |v: f64| sample(&g, |_| v).unwrap();
    let dt = 1e-3;
    let (u0, u1) = (0.7, -0.4);
    let mut s = init_state(&c(u0), &c(u1), None, dt).unwrap();
    let mut lin: f64 = 0.0;
    while s.step < 10_000 {
        step(&mut s, None).unwrap();
        let exact = u0 + u1 * (1.0 - (-s.t).exp());
        lin = lin.max(s.u_curr.values().iter().map(|v| (v - exact).abs()).fold(0.0, f64::max));
    }

    let (p, out) = (1.3, 0.01);
    let mut ode = Dopri5::new(Reduced { p }, 0.0, 60.0, out, Vector2::new(1.0, 0.0), 1e-12, 1e-12);
    ode.integrate().unwrap();
    let mut s = init_state(&c(1.0), &c(0.0), Some(p), dt).unwrap();
    let stride = (out / dt).round() as u64;
    let mut semi: f64 = 0.0;
    let mut until = 0.0;
    for (t, y) in ode.x_out().iter().zip(ode.y_out()).skip(1) {
        if y[0].abs() > 1e3 {
            break;
        }
        while s.step < (t / out).round() as u64 * stride {
            step(&mut s, Some(p)).unwrap();
        }
        assert!((s.t - t).abs() < 1e-9);
        semi = semi.max(rel(s.u_curr.values()[0], y[0]));
        until = *t;
    }
    (
        verdict(lin < 1e-4 && semi < 1e-3 && until > 1.0),
        format!("linear max err {lin:.2e} (< 1e-4); p=1.3 max rel err {semi:.2e} (< 1e-3) up to t = {until:.2}"),
    )
}

fn decay_and_monotonicity() -> ((Verdict, String), (Verdict, String)) {
    let dir = tmp();
    let mut cfg = ExperimentConfig::from_toml(DECAY).unwrap();
    cfg.solver.record_every = 1;
    let rep = run_experiment(&cfg, dir.path()).unwrap();
    let series = hwave_core::diagnostics::TimeSeries::read_csv(
        std::fs::File::open(dir.path().join("series.csv")).unwrap(),
    )
    .unwrap();
    let targets = derived_exponents(1).unwrap().decay_targets();
    let mut detail = Vec::new();
    let mut ok = true;
    for (c, target) in [Column::L2U, Column::L2GradU, Column::L2Ut].into_iter().zip(targets) {
        let f = fit_decay(&series, c, (10.0, 40.0)).unwrap();
        ok &= (f.slope - target).abs() <= 0.25 && f.r_squared >= 0.98;
        detail.push(format!("{c} slope {:.3} (target {target}) r2 {:.4}", f.slope, f.r_squared));
    }
    let initial = series.first().unwrap().l2_u;
    let bm = series.rows().iter().map(|r| r.boundary_mass).fold(0.0, f64::max);
    detail.push(format!("max boundary mass {bm:.2e} vs limit {:.2e}", 1e-3 * initial));
    let decay = if rep.status == ReportStatus::Invalid {
        (Verdict::Invalid, detail.join("; "))
    } else {
        (verdict(ok), detail.join("; "))
    };
    let m = weighted_energy_monotonicity(&series, MONOTONICITY_TOL).unwrap();
    let mono = (
        verdict(m.holds),
        format!(
            "max relative per-step increase {:.3e} over {} steps (<= {MONOTONICITY_TOL})",
            m.max_relative_increase,
            series.len() - 1
        ),
    );
    (decay, mono)
}

fn sweep() -> (Verdict, String) {
    let dir = tmp();
    let rep = experiment(SWEEP, dir.path());
    let blow = check(&rep, "blow-up");
    let global = check(&rep, "global");
    let bracket = check(&rep, "bracket");
    let ok = blow.len() == 3 && global.len() == 3 && bracket.len() == 1 && rep.checks.iter().all(|c| c.pass);
    let blow_t: Vec<String> = blow.iter().map(|c| format!("{:.2}", c.value)).collect();
    let ratios: Vec<String> = global.iter().map(|c| format!("{:.3}", c.value)).collect();
    (
        verdict(ok),
        format!(
            "t_blowup {} (< 50); global final/initial l2_u {}; bracket [{}, {}]",
            blow_t.join(", "),
            ratios.join(", "),
            rep.metrics["bracket_lo"],
            rep.metrics["bracket_hi"]
        ),
    )
}

fn certificate() -> (Verdict, String) {
    let dir = tmp();
    let rep = experiment(CERTIFICATE, dir.path());
    let measure = check(&rep, "measure ratio")[0].pass;
    let j = check(&rep, "J_R constant");
    let ratio = check(&rep, "ratio nondecreasing");
    let rows = rep.metrics["rows"].as_array().unwrap();
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.3}", r["ratio"].as_f64().unwrap())).collect();

    let unit = ExperimentConfig::from_toml(
        "[group]\nn = 1\n[grid]\nhalf_widths = [4.0, 4.0, 8.0]\nspacing = 0.5\n[experiment]\nname = \"certificate\"\nsource = \"analytic\"\nanalytic = \"1\"\ncertificate_p = 1.2\nradii = [2.0, 2.5]\n",
    )
    .unwrap();
    let dir2 = tmp();
    let rep2 = run_experiment(&unit, dir2.path()).unwrap();
    let sep = check(&rep2, "separable")[0];
    let ok = measure && j.len() == 1 && j[0].pass && ratio.len() == 1 && ratio[0].pass && sep.pass;
    (
        verdict(ok),
        format!(
            "measure ratio {}; J_R spread {:e}; ratios {} for R = 2, 4, 8; unit-field separable rel diff {:.1e}",
            check(&rep, "measure ratio")[0].value,
            j.first().map_or(f64::NAN, |c| c.value),
            ratios.join(", "),
            sep.value
        ),
    )
}

fn inequalities() -> (Verdict, String) {
    let dir = tmp();
    let w = experiment(
        "[group]\nn = 1\n[grid]\nhalf_widths = [4.0, 4.0, 8.0]\nspacing = 0.125\n[experiment]\nname = \"inequality\"\nselector = \"weighted_gn\"\nfamily_size = 10\n",
        dir.path(),
    );
    let gn = experiment(
        "[group]\nn = 1\n[grid]\nhalf_widths = [4.0, 4.0, 8.0]\nspacing = 0.125\n[experiment]\nname = \"inequality\"\nselector = \"gn\"\nfamily_size = 10\n",
        dir.path(),
    );
    let l1 = experiment(
        "[group]\nn = 1\n[grid]\nhalf_widths = [2.0, 2.0, 4.0]\nspacing = 0.25\n[experiment]\nname = \"inequality\"\nselector = \"l1l2\"\nfamily_size = 100\nseed = 20\n",
        dir.path(),
    );
    let failures42 = check(&w, "weighted Poincare")[0];
    let spread = check(&w, "weighted GN constant spread")[0];
    let scale = check(&gn, "gn ratio scale")[0];
    let emb = check(&l1, "l1-l2")[0];
    let ok = failures42.pass && spread.pass && scale.pass && emb.pass && l1.metrics["fields"] == 100;
    (
        verdict(ok),
        format!(
            "weighted estimate failures {}/10; constant max/min {:.3} (< 10); scale invariance {:.1e} (<= 1e-10); embedding failures {}/100",
            failures42.value, spread.value, scale.value, emb.value
        ),
    )
}

fn determinism() -> (Verdict, String) {
    let configs = [
        "[group]\nn = 1\n[grid]\nhalf_widths = [4.0, 4.0, 8.0]\nspacing = 0.25\n[solver]\np = 1.5\nt_end = 4.0\nrecord_every = 4\n[data]\nkind = \"plateau_bump\"\nvelocity_amplitude = 1.0\n[experiment]\nname = \"simulate\"\n",
        "[group]\nn = 1\n[grid]\nhalf_widths = [4.0, 4.0, 16.0]\nspacing = 0.5\n[solver]\np = 1.2\ndt = 0.05\nt_end = 4.0\n[data]\nkind = \"plateau_bump\"\nvelocity_amplitude = 1.0\n[experiment]\nname = \"certificate\"\nradii = [2.0]\n",
    ];
    let files = ["series.csv", "certificate.csv"];
    let mut ok = true;
    let mut compared = 0;
    for (text, file) in configs.iter().zip(files) {
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let mut outputs = Vec::new();
        for threads in [1, 4, 4] {
            let dir = tmp();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_experiment(&cfg, dir.path())).unwrap();
            outputs.push((
                std::fs::read(dir.path().join(file)).unwrap(),
                std::fs::read(dir.path().join("report.json")).unwrap(),
            ));
        }
        ok &= outputs.windows(2).all(|w| w[0] == w[1]);
        compared += outputs.len();
    }
    (verdict(ok), format!("{compared} runs over threads {{1, 4, 4}}: CSV and report bytes identical"))
}

impl Line {
    fn print(&self) {
        let tag = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::KnownFail => "FAIL (known, see ledger)",
            Verdict::Invalid => "INVALID (box bound violated)",
        };
        println!("{tag} [{}] {} ({:.1} s): {}", self.id, self.name, self.seconds, self.detail);
    }
}

fn timed(id: u8, name: &'static str, budget: Option<f64>, f: impl FnOnce() -> (Verdict, String)) -> Line {
    let start = Instant::now();
    let (mut verdict, mut detail) = f();
    let seconds = start.elapsed().as_secs_f64();
    if let Some(b) = budget.filter(|b| seconds >= *b) {
        verdict = Verdict::Fail;
        detail.push_str(&format!("; over the {b} s budget"));
    }
    let line = Line { id, name, verdict, detail, seconds };
    line.print();
    line
}

fn main() {
    let mut lines = vec![
        timed(1, "gaussian weight integral", Some(5.0), gaussian),
        timed(2, "stencil order", Some(30.0), stencil_order),
        timed(3, "ODE reduction", None, ode_reduction),
    ];
    let start = Instant::now();
    let (decay, mono) = decay_and_monotonicity();
    let seconds = start.elapsed().as_secs_f64();
    for (id, name, (verdict, detail)) in [
        (4, "linear decay exponents", decay),
        (5, "weighted energy monotonicity", mono),
    ] {
        let line = Line { id, name, verdict, detail, seconds };
        line.print();
        lines.push(line);
    }
    lines.push(timed(6, "Fujita dichotomy", None, sweep));
    lines.push(timed(7, "test-function certificate", None, certificate));
    lines.push(timed(8, "inequality suites", None, inequalities));
    lines.push(timed(9, "determinism", None, determinism));

    let unexpected = lines.iter().filter(|l| l.verdict == Verdict::Fail).count();
    if unexpected > 0 {
        eprintln!("{unexpected} unexpected acceptance failure(s)");
        std::process::exit(1);
    }
}
