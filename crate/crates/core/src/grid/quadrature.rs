//! Tensor-product quadrature and the norms built on it.
//!
//! Periodic axes use the rectangle rule. Dirichlet axes with an odd number
//! of nodes use composite Simpson weights, otherwise the trapezoid rule.
//! Sums are reduced per `x_1` slab with pairwise summation and the slab
//! partials are combined pairwise in slab order, so results do not depend
//! on the number of worker threads.

use rayon::prelude::*;

use super::{Boundary, Field, GridSpec};
use crate::error::{Error, Result};
use crate::geometry::{gaussian_weight_integral, psi_raw, HeisenbergParams};

/// `sigma * psi` above this value is refused instead of overflowing `exp`.
pub const WEIGHT_EXPONENT_LIMIT: f64 = 700.0;

pub(crate) fn axis_weights(h: f64, points: usize, boundary: Boundary) -> Vec<f64> {
    match boundary {
        Boundary::Periodic => vec![h; points],
        Boundary::DirichletZero if points >= 3 && points % 2 == 1 => (0..points)
            .map(|i| {
                let c = if i == 0 || i + 1 == points {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect(),
        Boundary::DirichletZero => (0..points)
            .map(|i| if i == 0 || i + 1 == points { 0.5 * h } else { h })
            .collect(),
    }
}

/// Pairwise sum of `term(lo..hi)`.
pub(crate) fn pairwise_by(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
    const BLOCK: usize = 32;
    if hi - lo <= BLOCK {
        let mut s = 0.0;
        for i in lo..hi {
            s += term(i);
        }
        s
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_by(lo, mid, term) + pairwise_by(mid, hi, term)
    }
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_by(0, values.len(), &|i| values[i])
}

/// `sum_nodes w(node) * f(flat, r2, tau)` where `r2 = |x|^2 + |y|^2`.
pub(crate) fn integrate_nodes<F>(grid: &GridSpec, f: F) -> f64
where
    F: Fn(usize, f64, f64) -> f64 + Sync,
{
    let slab = grid.slab_len();
    let wx = grid.axis_weights(0);
    let w_in = grid.slab_weights();
    let r2_in = grid.slab_r2();
    let tau_in = grid.slab_tau();
    let partials: Vec<f64> = (0..grid.points()[0])
        .into_par_iter()
        .map(|i| {
            let x0 = grid.coord(0, i);
            let x0_sq = x0 * x0;
            let base = i * slab;
            let s = pairwise_by(0, slab, &|j| w_in[j] * f(base + j, x0_sq + r2_in[j], tau_in[j]));
            wx[i] * s
        })
        .collect();
    pairwise_sum(&partials)
}

fn check_finite(u: &Field) -> Result<()> {
    if let Some(i) = u.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite value at node {i}")));
    }
    Ok(())
}

pub(crate) fn check_weight(grid: &GridSpec, sigma: f64, t: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be >= 0, got {t}")));
    }
    let max_exponent = sigma * grid.psi_max(t);
    if max_exponent > WEIGHT_EXPONENT_LIMIT {
        return Err(Error::WeightOverflow { max_exponent });
    }
    Ok(())
}

pub fn integral(u: &Field) -> Result<f64> {
    check_finite(u)?;
    let v = u.values();
    Ok(integrate_nodes(u.grid(), |i, _, _| v[i]))
}

pub fn inner_product(u: &Field, w: &Field) -> Result<f64> {
    if !u.same_grid(w) {
        return Err(Error::invalid("fields live on different grids"));
    }
    check_finite(u)?;
    check_finite(w)?;
    let (a, b) = (u.values(), w.values());
    Ok(integrate_nodes(u.grid(), |i, _, _| a[i] * b[i]))
}

pub fn lq_norm(u: &Field, q: f64) -> Result<f64> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::invalid(format!("q must lie in [1, inf), got {q}")));
    }
    check_finite(u)?;
    let v = u.values();
    let s = if q == 1.0 {
        integrate_nodes(u.grid(), |i, _, _| v[i].abs())
    } else if q == 2.0 {
        integrate_nodes(u.grid(), |i, _, _| v[i] * v[i])
    } else {
        integrate_nodes(u.grid(), |i, _, _| v[i].abs().powf(q))
    };
    Ok(s.powf(1.0 / q))
}

pub fn l2_norm(u: &Field) -> Result<f64> {
    lq_norm(u, 2.0)
}

pub fn linf_norm(u: &Field) -> Result<f64> {
    check_finite(u)?;
    Ok(u.values().par_iter().map(|v| v.abs()).reduce(|| 0.0, f64::max))
}

/// `|| exp(sigma psi(t, .)) u ||_{L^2}`.
pub fn weighted_l2(u: &Field, sigma: f64, t: f64) -> Result<f64> {
    let grid = u.grid();
    check_weight(grid, sigma, t)?;
    check_finite(u)?;
    let v = u.values();
    let s = integrate_nodes(grid, |i, r2, tau| {
        let w = (sigma * psi_raw(t, r2, tau)).exp() * v[i];
        w * w
    });
    if !s.is_finite() {
        return Err(Error::Numeric("weighted L2 integral overflowed".into()));
    }
    Ok(s.sqrt())
}

/// Quadrature of `exp(-2 sigma psi(t, .))` over the grid.
pub fn gaussian_weight_quadrature(grid: &GridSpec, sigma: f64, t: f64) -> Result<f64> {
    check_weight(grid, sigma, t)?;
    Ok(integrate_nodes(grid, |_, r2, tau| (-2.0 * sigma * psi_raw(t, r2, tau)).exp()))
}

/// Relative deviation of the box quadrature from the whole-space closed form.
pub fn gaussian_weight_error(
    grid: &GridSpec,
    params: &HeisenbergParams,
    sigma: f64,
    t: f64,
) -> Result<f64> {
    let exact = gaussian_weight_integral(params, sigma, t);
    Ok((gaussian_weight_quadrature(grid, sigma, t)? - exact).abs() / exact)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `||v||_{L^1} <= (int exp(-2 sigma psi))^{1/2} || exp(sigma psi) v ||_{L^2}`.
pub fn l1_l2_embedding_check(u: &Field, sigma: f64, t: f64) -> Result<EmbeddingCheck> {
    let lhs = lq_norm(u, 1.0)?;
    let rhs = gaussian_weight_quadrature(u.grid(), sigma, t)?.sqrt() * weighted_l2(u, sigma, t)?;
    Ok(EmbeddingCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12),
    })
}
