use std::sync::Arc;

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, EvalexprError, EvalexprResult,
    HashMapContext, Node, Value,
};

use super::config::{DataKind, DataSection, ExperimentConfig};
use crate::certificate::plateau_bump;
use crate::error::{Error, Result};
use crate::geometry::{group_multiply, psi_raw, GroupPoint};
use crate::grid::{sample, Field, GridSpec};

pub fn build_grid(cfg: &ExperimentConfig) -> Result<Arc<GridSpec>> {
    let g = &cfg.grid;
    let points = match (&g.points, g.spacing) {
        (Some(p), _) => p.clone(),
        (None, Some(h)) => g
            .half_widths
            .iter()
            .map(|l| {
                let cells = 2.0 * l / h;
                let rounded = cells.round();
                if (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 1.0 {
                    return Err(Error::Config(format!(
                        "grid.half_widths entry {l} is not a whole number of cells of size {h}"
                    )));
                }
                Ok(match g.boundary {
                    crate::grid::Boundary::DirichletZero => rounded as usize + 1,
                    crate::grid::Boundary::Periodic => rounded as usize,
                })
            })
            .collect::<Result<_>>()?,
        (None, None) => return Err(Error::Config("grid needs points or spacing".into())),
    };
    let grid = GridSpec::new(cfg.group.n, g.half_widths.clone(), points, g.boundary)
        .map_err(|e| Error::Config(format!("[grid] {e}")))?;
    Ok(Arc::new(grid))
}

/// Compiled `f(x, y, tau, t)` with `x1.., y1..` aliases for `n > 1`.
pub struct Expression {
    node: Node<DefaultNumericTypes>,
    source: String,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self> {
        let node = build_operator_tree::<DefaultNumericTypes>(source)
            .map_err(|e| Error::Config(format!("expression {source:?}: {e}")))?;
        let e = Expression {
            node,
            source: source.to_string(),
        };
        // arity errors only surface on evaluation; x2.. may be unbound here
        match e.eval_raw(0.0, &GroupPoint::origin(1)) {
            Ok(_) | Err(EvalexprError::VariableIdentifierNotFound(_)) => {}
            Err(err) => return Err(Error::Config(format!("expression {source:?}: {err}"))),
        }
        Ok(e)
    }

    fn eval_raw(&self, t: f64, eta: &GroupPoint) -> EvalexprResult<f64, DefaultNumericTypes> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        ctx.set_value("t".into(), Value::Float(t))?;
        ctx.set_value("x".into(), Value::Float(eta.x[0]))?;
        ctx.set_value("y".into(), Value::Float(eta.y[0]))?;
        ctx.set_value("tau".into(), Value::Float(eta.tau))?;
        for (i, (x, y)) in eta.x.iter().zip(&eta.y).enumerate() {
            ctx.set_value(format!("x{}", i + 1), Value::Float(*x))?;
            ctx.set_value(format!("y{}", i + 1), Value::Float(*y))?;
        }
        let r2 = eta.horizontal_sq();
        ctx.set_value("r2".into(), Value::Float(r2))?;
        ctx.set_value("psi".into(), Value::Float(psi_raw(t, r2, eta.tau)))?;
        self.node.eval_number_with_context(&ctx)
    }

    pub fn eval(&self, t: f64, eta: &GroupPoint) -> Result<f64> {
        self.eval_raw(t, eta)
            .map_err(|e| Error::Config(format!("expression {:?}: {e}", self.source)))
    }

    pub fn sample(&self, grid: &Arc<GridSpec>, t: f64) -> Result<Field> {
        use rayon::prelude::*;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| self.eval(t, &grid.point_at(i)))
            .collect::<Result<Vec<f64>>>()?;
        Field::from_values(grid, values).map_err(|e| Error::Config(format!("expression {:?}: {e}", self.source)))
    }
}

fn translated(n: usize, center: &Option<Vec<f64>>) -> Result<Option<GroupPoint>> {
    let Some(c) = center else { return Ok(None) };
    let p = GroupPoint::new(c[..n].to_vec(), c[n..2 * n].to_vec(), c[2 * n])
        .map_err(|e| Error::Config(format!("data.center: {e}")))?;
    Ok(Some(p.inverse()))
}

/// Profile of unit amplitude for the configured data kind.
fn profile(grid: &Arc<GridSpec>, data: &DataSection) -> Result<Field> {
    let shift = translated(grid.n(), &data.center)?;
    let width = data.width;
    let kind = data.kind;
    let eval = move |eta: &GroupPoint| -> f64 {
        let local;
        let eta = match &shift {
            Some(s) => {
                local = group_multiply(s, eta).expect("dimensions checked");
                &local
            }
            None => eta,
        };
        match kind {
            DataKind::Zero | DataKind::CustomExpression => 0.0,
            DataKind::GaussianWeight => (-2.0 * psi_raw(0.0, eta.horizontal_sq(), eta.tau)).exp(),
            DataKind::PlateauBump => plateau_bump(eta, width),
        }
    };
    sample(grid, eval)
}

/// `(u0, u1)` on `grid` for the configured data.
pub fn build_data(grid: &Arc<GridSpec>, data: &DataSection, amplitude: f64) -> Result<(Field, Field)> {
    if data.kind == DataKind::CustomExpression {
        let src = data.expression.as_deref().unwrap_or("0");
        let mut u0 = Expression::parse(src)?.sample(grid, 0.0)?.scaled(amplitude);
        let mut u1 = match &data.velocity_expression {
            Some(v) => Expression::parse(v)?.sample(grid, 0.0)?.scaled(amplitude),
            None => Field::zeros(grid),
        };
        u0.zero_boundary();
        u1.zero_boundary();
        return Ok((u0, u1));
    }
    let base = profile(grid, data)?;
    let u1 = base.scaled(amplitude * data.velocity_amplitude);
    Ok((base.scaled(amplitude), u1))
}

/// Radius of the horizontal support (or effective support) of the profile.
pub fn support_radius(data: &DataSection) -> Option<(f64, f64)> {
    let c = data.center.as_ref();
    let (cx, ct) = c.map_or((0.0, 0.0), |c| {
        let n = (c.len() - 1) / 2;
        (c[..2 * n].iter().map(|v| v * v).sum::<f64>().sqrt(), c[2 * n].abs())
    });
    match data.kind {
        DataKind::Zero => Some((0.0, 0.0)),
        DataKind::PlateauBump => Some((cx + data.width * 2f64.sqrt(), ct + data.width * data.width)),
        // e^{-2 psi} < 1e-6 beyond these
        DataKind::GaussianWeight => {
            let l = (1e6f64).ln();
            Some((cx + (4.0 * l).sqrt(), ct + l))
        }
        DataKind::CustomExpression => None,
    }
}
