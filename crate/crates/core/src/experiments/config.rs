use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Boundary;
use crate::solver::{SolverConfig, TimeStep, DEFAULT_BLOWUP_THRESHOLD, DEFAULT_CFL_FRACTION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: GroupSection,
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub data: DataSection,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_widths: Vec<f64>,
    /// Point counts per axis; alternatively a uniform `spacing`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::DirichletZero
}

/// `"auto"` or a positive step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSetting {
    Value(f64),
    Keyword(String),
}

impl Default for DtSetting {
    fn default() -> Self {
        DtSetting::Keyword("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default)]
    pub dt: DtSetting,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_fraction: f64,
}

fn default_t_end() -> f64 {
    10.0
}
fn default_threshold() -> f64 {
    DEFAULT_BLOWUP_THRESHOLD
}
fn default_record_every() -> usize {
    1
}
fn default_cfl() -> f64 {
    DEFAULT_CFL_FRACTION
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            p: None,
            dt: DtSetting::default(),
            t_end: default_t_end(),
            blowup_threshold: default_threshold(),
            record_every: default_record_every(),
            snapshot_times: Vec::new(),
            cfl_fraction: default_cfl(),
        }
    }
}

impl SolverSection {
    pub fn to_solver_config(&self, p: Option<f64>, t_end: f64) -> Result<SolverConfig> {
        let dt = match &self.dt {
            DtSetting::Value(v) => TimeStep::Fixed(*v),
            DtSetting::Keyword(k) if k == "auto" => TimeStep::Auto,
            DtSetting::Keyword(k) => {
                return Err(Error::Config(format!("solver.dt must be \"auto\" or a number, got {k:?}")))
            }
        };
        let cfg = SolverConfig {
            p,
            dt,
            t_end,
            cfl_fraction: self.cfl_fraction,
            blowup_threshold: self.blowup_threshold,
            record_every: self.record_every,
            snapshot_times: self.snapshot_times.clone(),
        };
        cfg.validate().map_err(|e| Error::Config(format!("[solver] {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Zero,
    GaussianWeight,
    PlateauBump,
    CustomExpression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default = "default_kind")]
    pub kind: DataKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Group translation applied to the profile, `u(eta) = f(center^{-1} eta)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub width: f64,
    /// `u1 = velocity_amplitude * (profile)`; expressions use `velocity_expression`.
    #[serde(default)]
    pub velocity_amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_expression: Option<String>,
}

fn default_kind() -> DataKind {
    DataKind::Zero
}
fn one() -> f64 {
    1.0
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            kind: DataKind::Zero,
            amplitude: 1.0,
            center: None,
            width: 1.0,
            velocity_amplitude: 0.0,
            expression: None,
            velocity_expression: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Simulate,
    Decay,
    Sweep,
    Inequality,
    Certificate,
}

impl ExperimentName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::Simulate => "simulate",
            ExperimentName::Decay => "decay",
            ExperimentName::Sweep => "sweep",
            ExperimentName::Inequality => "inequality",
            ExperimentName::Certificate => "certificate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalitySelector {
    Gaussian,
    Gn,
    WeightedGn,
    L1l2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateSource {
    Run,
    Snapshots,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: ExperimentName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    // decay
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fit_windows: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_csv: Option<PathBuf>,

    // sweep
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blowup_p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub global_p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_amplitude: Option<f64>,

    // inequality
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<InequalitySelector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_size: Option<usize>,

    // certificate
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<CertificateSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate_p: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.group.n < 1 {
            return bad("group.n must be at least 1".into());
        }
        let axes = 2 * self.group.n + 1;
        if self.grid.half_widths.len() != axes {
            return bad(format!(
                "grid.half_widths needs {axes} entries for n = {}, got {}",
                self.group.n,
                self.grid.half_widths.len()
            ));
        }
        match (&self.grid.points, self.grid.spacing) {
            (Some(p), None) if p.len() != axes => {
                return bad(format!("grid.points needs {axes} entries, got {}", p.len()))
            }
            (Some(_), None) => {}
            (None, Some(h)) if h > 0.0 && h.is_finite() => {}
            (None, Some(h)) => return bad(format!("grid.spacing must be positive, got {h}")),
            _ => return bad("exactly one of grid.points and grid.spacing is required".into()),
        }
        if let Some(p) = self.solver.p {
            if !(p > 1.0 && p.is_finite()) {
                return bad(format!("solver.p must exceed 1, got {p}"));
            }
        }
        if let DtSetting::Keyword(k) = &self.solver.dt {
            if k != "auto" {
                return bad(format!("solver.dt must be \"auto\" or a number, got {k:?}"));
            }
        }
        if let Some(c) = &self.data.center {
            if c.len() != axes {
                return bad(format!("data.center needs {axes} entries, got {}", c.len()));
            }
        }
        if !(self.data.width > 0.0 && self.data.width.is_finite()) {
            return bad(format!("data.width must be positive, got {}", self.data.width));
        }
        if self.data.kind == DataKind::CustomExpression && self.data.expression.is_none() {
            return bad("data.kind = \"custom_expression\" needs data.expression".into());
        }
        let e = &self.experiment;
        if e.name == ExperimentName::Inequality && e.selector.is_none() {
            return bad("experiment.selector is required for the inequality experiment".into());
        }
        if e.name == ExperimentName::Certificate && e.radii.is_empty() {
            return bad("experiment.radii is required for the certificate experiment".into());
        }
        for w in &e.fit_windows {
            if !(w[0] >= 0.0 && w[0] < w[1]) {
                return bad(format!("fit window {w:?} is not an interval in t >= 0"));
            }
        }
        Ok(())
    }
}
