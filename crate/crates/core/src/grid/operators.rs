//! Finite-difference horizontal gradient and sub-Laplacian for `n = 1`.
//!
//! The sub-Laplacian uses the expanded form
//! `u_xx + u_yy + (x^2 + y^2)/4 u_tt + x u_yt - y u_xt`
//! with 3-point second differences and 4-point centered cross differences.
//! Dirichlet grids write `0` on the boundary layer and read only interior
//! neighbourhoods; periodic grids wrap every index.

use rayon::prelude::*;

use super::{Boundary, Field, GridSpec};
use crate::error::{Error, Result};

struct Stencil {
    nx: usize,
    ny: usize,
    nt: usize,
    sx: usize,
    sy: usize,
    inv_hx2: f64,
    inv_hy2: f64,
    inv_ht2: f64,
    inv_4hyht: f64,
    inv_4hxht: f64,
    inv_2hx: f64,
    inv_2hy: f64,
    inv_2ht: f64,
    periodic: bool,
}

impl Stencil {
    fn new(grid: &GridSpec) -> Result<Self> {
        grid.check_solver_grade()?;
        let p = grid.points();
        let h = grid.spacings();
        Ok(Stencil {
            nx: p[0],
            ny: p[1],
            nt: p[2],
            sx: p[1] * p[2],
            sy: p[2],
            inv_hx2: 1.0 / (h[0] * h[0]),
            inv_hy2: 1.0 / (h[1] * h[1]),
            inv_ht2: 1.0 / (h[2] * h[2]),
            inv_4hyht: 1.0 / (4.0 * h[1] * h[2]),
            inv_4hxht: 1.0 / (4.0 * h[0] * h[2]),
            inv_2hx: 0.5 / h[0],
            inv_2hy: 0.5 / h[1],
            inv_2ht: 0.5 / h[2],
            periodic: grid.boundary() == Boundary::Periodic,
        })
    }

    fn wrap(i: usize, n: usize) -> (usize, usize) {
        ((i + n - 1) % n, (i + 1) % n)
    }
}

fn check_len(grid: &GridSpec, u: &[f64], out: &[f64]) -> Result<()> {
    if u.len() != grid.len() || out.len() != grid.len() {
        return Err(Error::invalid(format!(
            "buffers of length {} and {} for a grid of {} points",
            u.len(),
            out.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// For every node, `out[i] = combine(i, (Δ_H u)[i], out[i])`.
///
/// Dirichlet boundary nodes are set to `0` without calling `combine`.
/// Reading the old `out[i]` lets time steppers update a buffer in place.
pub fn map_sublaplacian<F>(grid: &GridSpec, u: &[f64], out: &mut [f64], combine: F) -> Result<()>
where
    F: Fn(usize, f64, f64) -> f64 + Sync,
{
    let s = Stencil::new(grid)?;
    check_len(grid, u, out)?;
    let xs = grid.axis_coords(0);
    let ys = grid.axis_coords(1);
    out.par_chunks_mut(s.sx).enumerate().for_each(|(i, slab)| {
        let base = i * s.sx;
        if !s.periodic && (i == 0 || i + 1 == s.nx) {
            slab.fill(0.0);
            return;
        }
        let (im, ip) = Stencil::wrap(i, s.nx);
        let x = xs[i];
        let c_yt = x * s.inv_4hyht;
        for j in 0..s.ny {
            let row = &mut slab[j * s.sy..(j + 1) * s.sy];
            if !s.periodic && (j == 0 || j + 1 == s.ny) {
                row.fill(0.0);
                continue;
            }
            let (jm, jp) = Stencil::wrap(j, s.ny);
            let y = ys[j];
            let c_tt = 0.25 * (x * x + y * y) * s.inv_ht2;
            let c_xt = -y * s.inv_4hxht;
            let c0 = base + j * s.sy;
            let xp = ip * s.sx + j * s.sy;
            let xm = im * s.sx + j * s.sy;
            let yp = base + jp * s.sy;
            let ym = base + jm * s.sy;
            let point = |k: usize, km: usize, kp: usize| {
                let uc = u[c0 + k];
                let dxx = (u[xp + k] - 2.0 * uc + u[xm + k]) * s.inv_hx2;
                let dyy = (u[yp + k] - 2.0 * uc + u[ym + k]) * s.inv_hy2;
                let dtt = (u[c0 + kp] - 2.0 * uc + u[c0 + km]) * c_tt;
                let dyt = (u[yp + kp] - u[yp + km] - u[ym + kp] + u[ym + km]) * c_yt;
                let dxt = (u[xp + kp] - u[xp + km] - u[xm + kp] + u[xm + km]) * c_xt;
                dxx + dyy + dtt + dyt + dxt
            };
            if s.periodic {
                for (k, o) in row.iter_mut().enumerate() {
                    let (km, kp) = Stencil::wrap(k, s.nt);
                    *o = combine(c0 + k, point(k, km, kp), *o);
                }
            } else {
                row[0] = 0.0;
                row[s.nt - 1] = 0.0;
                for k in 1..s.nt - 1 {
                    row[k] = combine(c0 + k, point(k, k - 1, k + 1), row[k]);
                }
            }
        }
    });
    Ok(())
}

pub fn apply_sublaplacian(u: &Field) -> Result<Field> {
    let mut out = Field::zeros(u.grid());
    map_sublaplacian(u.grid(), u.values(), out.values_mut(), |_, lap, _| lap)?;
    Ok(out)
}

/// Centered `(X_1 u, Y_1 u)` into the two output buffers.
pub fn horizontal_gradient_into(
    grid: &GridSpec,
    u: &[f64],
    gx: &mut [f64],
    gy: &mut [f64],
) -> Result<()> {
    let s = Stencil::new(grid)?;
    check_len(grid, u, gx)?;
    check_len(grid, u, gy)?;
    let xs = grid.axis_coords(0);
    let ys = grid.axis_coords(1);
    gx.par_chunks_mut(s.sx)
        .zip(gy.par_chunks_mut(s.sx))
        .enumerate()
        .for_each(|(i, (sx_out, sy_out))| {
            let base = i * s.sx;
            if !s.periodic && (i == 0 || i + 1 == s.nx) {
                sx_out.fill(0.0);
                sy_out.fill(0.0);
                return;
            }
            let (im, ip) = Stencil::wrap(i, s.nx);
            let x = xs[i];
            for j in 0..s.ny {
                let r = j * s.sy..(j + 1) * s.sy;
                let (rx, ry) = (&mut sx_out[r.clone()], &mut sy_out[r]);
                if !s.periodic && (j == 0 || j + 1 == s.ny) {
                    rx.fill(0.0);
                    ry.fill(0.0);
                    continue;
                }
                let (jm, jp) = Stencil::wrap(j, s.ny);
                let y = ys[j];
                let c0 = base + j * s.sy;
                let xp = ip * s.sx + j * s.sy;
                let xm = im * s.sx + j * s.sy;
                let yp = base + jp * s.sy;
                let ym = base + jm * s.sy;
                for k in 0..s.nt {
                    if !s.periodic && (k == 0 || k + 1 == s.nt) {
                        rx[k] = 0.0;
                        ry[k] = 0.0;
                        continue;
                    }
                    let (km, kp) = Stencil::wrap(k, s.nt);
                    let dx = (u[xp + k] - u[xm + k]) * s.inv_2hx;
                    let dy = (u[yp + k] - u[ym + k]) * s.inv_2hy;
                    let dt = (u[c0 + kp] - u[c0 + km]) * s.inv_2ht;
                    rx[k] = dx - 0.5 * y * dt;
                    ry[k] = dy + 0.5 * x * dt;
                }
            }
        });
    Ok(())
}

pub fn apply_horizontal_gradient(u: &Field) -> Result<(Field, Field)> {
    let mut gx = Field::zeros(u.grid());
    let mut gy = Field::zeros(u.grid());
    horizontal_gradient_into(u.grid(), u.values(), gx.values_mut(), gy.values_mut())?;
    Ok((gx, gy))
}

/// `X_1(X_1 u) + Y_1(Y_1 u)` from two passes of the centered gradient.
///
/// Wider stencil than [`apply_sublaplacian`]; kept as an independent check.
pub fn apply_sublaplacian_composed(u: &Field) -> Result<Field> {
    let (gx, gy) = apply_horizontal_gradient(u)?;
    let (xx, _) = apply_horizontal_gradient(&gx)?;
    let (_, yy) = apply_horizontal_gradient(&gy)?;
    xx.zip_map(&yy, |a, b| a + b)
}
