use crate::error::{Error, Result};
use crate::geometry::psi_raw;
use crate::grid::quadrature::{check_weight, integrate_nodes};
use crate::grid::{apply_horizontal_gradient, weighted_l2, Field};

fn same_grid(fields: &[&Field]) -> Result<()> {
    if fields.windows(2).any(|w| !w[0].same_grid(w[1])) {
        return Err(Error::invalid("fields live on different grids"));
    }
    Ok(())
}

/// `1/2 int exp(2 psi(t)) (u_t^2 + |grad_H u|^2)`.
pub fn weighted_energy(u_t: &Field, grad: (&Field, &Field), t: f64) -> Result<f64> {
    same_grid(&[u_t, grad.0, grad.1])?;
    let grid = u_t.grid();
    check_weight(grid, 1.0, t)?;
    let (a, b, c) = (u_t.values(), grad.0.values(), grad.1.values());
    let s = integrate_nodes(grid, |i, r2, tau| {
        (2.0 * psi_raw(t, r2, tau)).exp() * (a[i] * a[i] + b[i] * b[i] + c[i] * c[i])
    });
    if !s.is_finite() {
        return Err(Error::Numeric(format!("weighted energy is not finite at t = {t}")));
    }
    Ok(0.5 * s)
}

/// `1/2 (||u_t||^2 + ||grad_H u||^2)`.
pub fn energy(u_t: &Field, grad: (&Field, &Field)) -> Result<f64> {
    same_grid(&[u_t, grad.0, grad.1])?;
    let (a, b, c) = (u_t.values(), grad.0.values(), grad.1.values());
    let s = integrate_nodes(u_t.grid(), |i, _, _| a[i] * a[i] + b[i] * b[i] + c[i] * c[i]);
    if !s.is_finite() {
        return Err(Error::Numeric("energy is not finite".into()));
    }
    Ok(0.5 * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataNorms {
    /// `||e^psi u0|| + ||e^psi grad_H u0|| + ||e^psi u1||` at `t = 0`.
    pub a_norm: f64,
    /// `(int e^{2 psi(0)} (u1^2 + |grad_H u0|^2))^{1/2}`.
    pub i0: f64,
}

pub fn data_norm_a(u0: &Field, u1: &Field) -> Result<DataNorms> {
    same_grid(&[u0, u1])?;
    let (gx, gy) = apply_horizontal_gradient(u0)?;
    let w_u0 = weighted_l2(u0, 1.0, 0.0)?;
    let w_u1 = weighted_l2(u1, 1.0, 0.0)?;
    let w_gx = weighted_l2(&gx, 1.0, 0.0)?;
    let w_gy = weighted_l2(&gy, 1.0, 0.0)?;
    let w_grad = w_gx.hypot(w_gy);
    Ok(DataNorms {
        a_norm: w_u0 + w_grad + w_u1,
        i0: (w_u1 * w_u1 + w_grad * w_grad).sqrt(),
    })
}
