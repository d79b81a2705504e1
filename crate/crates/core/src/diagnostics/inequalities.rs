use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{psi_raw, theta, HeisenbergParams};
use crate::grid::quadrature::{check_weight, integrate_nodes};
use crate::grid::{apply_horizontal_gradient, lq_norm, Field};

pub const POINCARE_TOL: f64 = 5e-2;

fn grad_l2(u: &Field) -> Result<f64> {
    let (gx, gy) = apply_horizontal_gradient(u)?;
    let (a, b) = (gx.values(), gy.values());
    Ok(integrate_nodes(u.grid(), |i, _, _| a[i] * a[i] + b[i] * b[i]).sqrt())
}

/// `||v||_q / (||grad_H v||^theta ||v||_2^{1 - theta})`.
pub fn gn_ratio(v: &Field, q: f64, params: &HeisenbergParams) -> Result<f64> {
    let th = theta(q, params)?;
    let num = lq_norm(v, q)?;
    let l2 = lq_norm(v, 2.0)?;
    let g = grad_l2(v)?;
    let den = g.powf(th) * l2.powf(1.0 - th);
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::invalid(format!("gn_ratio denominator is {den}")));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedGnCheck {
    pub lhs_poincare: f64,
    pub rhs_poincare: f64,
    pub lhs_gn: f64,
    pub rhs_gn: f64,
    pub holds_poincare: bool,
    pub holds_gn: bool,
    pub constant_gn: f64,
}

/// Discrete checks of the weighted Poincare-type estimate and the weighted
/// Gagliardo-Nirenberg inequality for one field.
///
/// `f = e^{sigma psi} v` is formed node-wise and differentiated with the
/// same centered stencil as `v`.
pub fn weighted_gn_check(
    v: &Field,
    sigma: f64,
    t: f64,
    q: f64,
    params: &HeisenbergParams,
) -> Result<WeightedGnCheck> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::invalid(format!("sigma must lie in (0, 1], got {sigma}")));
    }
    let th = theta(q, params)?;
    let grid = v.grid();
    check_weight(grid, 1.0, t)?;
    let n = params.n() as f64;

    let f = v.multiply_by(|eta| (sigma * psi_raw(t, eta.horizontal_sq(), eta.tau)).exp());
    let f_sq = lq_norm(&f, 2.0)?.powi(2);
    let grad_f_sq = grad_l2(&f)?.powi(2);
    let (gx, gy) = apply_horizontal_gradient(v)?;
    let (a, b) = (gx.values(), gy.values());
    let weighted_grad_sq = |s: f64| {
        integrate_nodes(grid, |i, r2, tau| {
            (2.0 * s * psi_raw(t, r2, tau)).exp() * (a[i] * a[i] + b[i] * b[i])
        })
    };
    let lhs_p = 0.5 * sigma * n / (1.0 + t) * f_sq + grad_f_sq;
    let rhs_p = weighted_grad_sq(sigma);
    let plain_grad = weighted_grad_sq(0.0).sqrt();
    let full_grad = weighted_grad_sq(1.0).sqrt();

    let lhs_g = lq_norm(&f, q)?;
    let rhs_g = (1.0 + t).powf((1.0 - th) / 2.0) * plain_grad.powf(1.0 - sigma) * full_grad.powf(sigma);
    let constant_gn = if lhs_g == 0.0 { 0.0 } else { lhs_g / rhs_g };
    if ![lhs_p, rhs_p, lhs_g, rhs_g].iter().all(|x| x.is_finite()) {
        return Err(Error::Numeric("weighted inequality terms overflowed".into()));
    }
    Ok(WeightedGnCheck {
        lhs_poincare: lhs_p,
        rhs_poincare: rhs_p,
        lhs_gn: lhs_g,
        rhs_gn: rhs_g,
        holds_poincare: lhs_p <= rhs_p * (1.0 + POINCARE_TOL),
        holds_gn: constant_gn.is_finite(),
        constant_gn,
    })
}
