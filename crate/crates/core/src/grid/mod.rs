//! Uniform box discretization of `H_n` and scalar fields sampled on it.
//!
//! Axes are ordered `x_1..x_n, y_1..y_n, tau`; values are stored row-major
//! with `x_1` outermost and `tau` innermost, so `tau` neighbours are
//! adjacent in memory. The stencil operators only support `n = 1`; sampling
//! and quadrature work for any `n`.

mod operators;
pub(crate) mod quadrature;
pub mod snapshot;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::GroupPoint;

pub use operators::{
    apply_horizontal_gradient, apply_sublaplacian, apply_sublaplacian_composed,
    horizontal_gradient_into, map_sublaplacian,
};
pub use quadrature::{
    gaussian_weight_quadrature, inner_product, integral, l1_l2_embedding_check, l2_norm,
    gaussian_weight_error, linf_norm, lq_norm, pairwise_sum, weighted_l2, EmbeddingCheck,
    WEIGHT_EXPONENT_LIMIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DirichletZero,
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    n: usize,
    half_widths: Vec<f64>,
    points: Vec<usize>,
    boundary: Boundary,
    spacings: Vec<f64>,
    weights: Vec<Vec<f64>>,
    slab: SlabTables,
}

/// Per-offset tables for one `x_1` slab: quadrature weight of the inner
/// axes, inner part of `|x|^2 + |y|^2`, and the `tau` coordinate.
#[derive(Debug, Clone, PartialEq)]
struct SlabTables {
    weights: Vec<f64>,
    r2: Vec<f64>,
    tau: Vec<f64>,
}

impl GridSpec {
    /// `half_widths` and `points` carry one entry per axis (`2n + 1` of them).
    pub fn new(
        n: usize,
        half_widths: Vec<f64>,
        points: Vec<usize>,
        boundary: Boundary,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("group parameter n must be at least 1"));
        }
        let axes = 2 * n + 1;
        if half_widths.len() != axes || points.len() != axes {
            return Err(Error::invalid(format!(
                "expected {axes} axes, got {} half-widths and {} point counts",
                half_widths.len(),
                points.len()
            )));
        }
        if let Some(l) = half_widths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid(format!("half-width {l} must be positive and finite")));
        }
        let min_points = match boundary {
            Boundary::DirichletZero => 2,
            Boundary::Periodic => 1,
        };
        if let Some(p) = points.iter().find(|p| **p < min_points) {
            return Err(Error::invalid(format!(
                "axis with {p} points; at least {min_points} required"
            )));
        }
        let total = points
            .iter()
            .try_fold(1usize, |acc, &p| acc.checked_mul(p))
            .filter(|t| t.checked_mul(std::mem::size_of::<f64>()).is_some_and(|b| b <= isize::MAX as usize))
            .ok_or_else(|| Error::invalid("grid point count overflows addressable memory"))?;
        debug_assert!(total > 0);

        let spacings: Vec<f64> = half_widths
            .iter()
            .zip(&points)
            .map(|(&l, &p)| match boundary {
                Boundary::DirichletZero => 2.0 * l / (p - 1) as f64,
                Boundary::Periodic => 2.0 * l / p as f64,
            })
            .collect();
        if spacings.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::invalid("grid spacing must be positive and finite"));
        }
        let weights: Vec<Vec<f64>> = spacings
            .iter()
            .zip(&points)
            .map(|(&h, &p)| quadrature::axis_weights(h, p, boundary))
            .collect();

        let mut grid = GridSpec {
            n,
            half_widths,
            points,
            boundary,
            spacings,
            weights,
            slab: SlabTables {
                weights: Vec::new(),
                r2: Vec::new(),
                tau: Vec::new(),
            },
        };
        grid.slab = grid.build_slab_tables();
        Ok(grid)
    }

    fn build_slab_tables(&self) -> SlabTables {
        let len = self.slab_len();
        let axes = self.axes();
        let mut tables = SlabTables {
            weights: Vec::with_capacity(len),
            r2: Vec::with_capacity(len),
            tau: Vec::with_capacity(len),
        };
        let mut idx = vec![0usize; axes];
        for _ in 0..len {
            let mut w = 1.0;
            let mut r2 = 0.0;
            for a in 1..axes {
                w *= self.weights[a][idx[a]];
                if a < 2 * self.n {
                    let c = self.coord(a, idx[a]);
                    r2 += c * c;
                }
            }
            tables.weights.push(w);
            tables.r2.push(r2);
            tables.tau.push(self.coord(axes - 1, idx[axes - 1]));
            for a in (1..axes).rev() {
                idx[a] += 1;
                if idx[a] < self.points[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        tables
    }

    /// `H_1` box `[-lx, lx] x [-ly, ly] x [-lt, lt]` with spacing `h` on every axis.
    pub fn h1_box(half_widths: [f64; 3], h: f64, boundary: Boundary) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("spacing {h} must be positive")));
        }
        let mut points = Vec::with_capacity(3);
        for l in half_widths {
            let cells = 2.0 * l / h;
            let rounded = cells.round();
            if (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 1.0 {
                return Err(Error::invalid(format!(
                    "half-width {l} is not a whole number of cells of size {h}"
                )));
            }
            let cells = rounded as usize;
            points.push(match boundary {
                Boundary::DirichletZero => cells + 1,
                Boundary::Periodic => cells,
            });
        }
        GridSpec::new(1, half_widths.to_vec(), points, boundary)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn slab_weights(&self) -> &[f64] {
        &self.slab.weights
    }

    /// Inner-axis part of `|x|^2 + |y|^2` for each offset within a slab.
    pub(crate) fn slab_r2(&self) -> &[f64] {
        &self.slab.r2
    }

    pub(crate) fn slab_tau(&self) -> &[f64] {
        &self.slab.tau
    }

    pub fn axes(&self) -> usize {
        2 * self.n + 1
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacings[axis]
    }

    /// Quadrature weights along one axis.
    pub fn axis_weights(&self, axis: usize) -> &[f64] {
        &self.weights[axis]
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of values per outermost (`x_1`) index.
    pub fn slab_len(&self) -> usize {
        self.points[1..].iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacings.iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        -self.half_widths[axis] + i as f64 * self.spacings[axis]
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis]).map(|i| self.coord(axis, i)).collect()
    }

    /// Multi-index of a flat offset.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes()];
        for a in (0..self.axes()).rev() {
            idx[a] = flat % self.points[a];
            flat /= self.points[a];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.points)
            .fold(0, |acc, (&i, &p)| acc * p + i)
    }

    pub fn point_at(&self, flat: usize) -> GroupPoint {
        let mut p = GroupPoint::origin(self.n);
        self.fill_point(flat, &mut p);
        p
    }

    fn fill_point(&self, flat: usize, p: &mut GroupPoint) {
        let idx = self.unflatten(flat);
        for j in 0..self.n {
            p.x[j] = self.coord(j, idx[j]);
            p.y[j] = self.coord(self.n + j, idx[self.n + j]);
        }
        p.tau = self.coord(2 * self.n, idx[2 * self.n]);
    }

    /// True when the node touches the outer layer of a Dirichlet box.
    pub fn on_boundary(&self, idx: &[usize]) -> bool {
        self.boundary == Boundary::DirichletZero
            && idx.iter().zip(&self.points).any(|(&i, &p)| i == 0 || i + 1 == p)
    }

    /// True when the node lies within `width` cells of any face.
    pub fn in_shell(&self, idx: &[usize], width: usize) -> bool {
        idx.iter()
            .zip(&self.points)
            .any(|(&i, &p)| i < width || i + width >= p)
    }

    /// Largest `sqrt(|x|^2 + |y|^2)` over the box.
    pub fn r_max(&self) -> f64 {
        self.half_widths[..2 * self.n]
            .iter()
            .map(|l| l * l)
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `psi(t, .)` over the box, attained at a corner.
    pub fn psi_max(&self, t: f64) -> f64 {
        let r = self.r_max();
        crate::geometry::psi_raw(t, r * r, self.half_widths[2 * self.n])
    }

    /// Operators need `n = 1` and at least three points on every axis.
    pub fn check_solver_grade(&self) -> Result<()> {
        if self.n != 1 {
            return Err(Error::UnsupportedGrid(format!(
                "stencils are implemented for n = 1 only (got n = {})",
                self.n
            )));
        }
        if let Some(p) = self.points.iter().find(|p| **p < 3) {
            return Err(Error::UnsupportedGrid(format!(
                "axis with {p} points; stencils need at least 3"
            )));
        }
        Ok(())
    }

    /// Whether the box `[-a, a]^{2n} x [-b, b]` fits inside the grid.
    pub fn contains_box(&self, horizontal: f64, vertical: f64) -> bool {
        self.half_widths[..2 * self.n]
            .iter()
            .all(|&l| horizontal <= l * (1.0 + 1e-12))
            && vertical <= self.half_widths[2 * self.n] * (1.0 + 1e-12)
    }
}

/// Scalar function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<GridSpec>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Arc<GridSpec>) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &Arc<GridSpec>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Field> {
        if !self.same_grid(other) {
            return Err(Error::invalid("fields live on different grids"));
        }
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .par_iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// Node-wise product with `g(eta)`, evaluated at the grid nodes.
    pub fn multiply_by(&self, g: impl Fn(&GroupPoint) -> f64 + Sync) -> Field {
        let other = sample_unchecked(&self.grid, g);
        Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .par_iter()
                .zip(&other)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Set the Dirichlet boundary layer to zero; no-op on periodic grids.
    pub fn zero_boundary(&mut self) {
        zero_boundary_layer(&self.grid, &mut self.values);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn zero_boundary_layer(grid: &GridSpec, values: &mut [f64]) {
    if grid.boundary != Boundary::DirichletZero {
        return;
    }
    let slab = grid.slab_len();
    let nx = grid.points[0];
    values
        .par_chunks_mut(slab)
        .enumerate()
        .for_each(|(i, chunk)| {
            if i == 0 || i + 1 == nx {
                chunk.fill(0.0);
                return;
            }
            let mut idx = vec![0; grid.axes()];
            idx[0] = i;
            for (off, v) in chunk.iter_mut().enumerate() {
                let mut rem = off;
                for a in (1..grid.axes()).rev() {
                    idx[a] = rem % grid.points[a];
                    rem /= grid.points[a];
                }
                if grid.on_boundary(&idx) {
                    *v = 0.0;
                }
            }
        });
}

fn sample_unchecked(grid: &GridSpec, f: impl Fn(&GroupPoint) -> f64 + Sync) -> Vec<f64> {
    let slab = grid.slab_len();
    let mut values = vec![0.0; grid.len()];
    values
        .par_chunks_mut(slab)
        .enumerate()
        .for_each(|(i, chunk)| {
            let mut p = GroupPoint::origin(grid.n);
            for (off, v) in chunk.iter_mut().enumerate() {
                grid.fill_point(i * slab + off, &mut p);
                *v = f(&p);
            }
        });
    values
}

/// Sample `f` at every node; Dirichlet grids get a zero boundary layer.
pub fn sample(grid: &Arc<GridSpec>, f: impl Fn(&GroupPoint) -> f64 + Sync) -> Result<Field> {
    let mut values = sample_unchecked(grid, f);
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Sampling { index, value });
    }
    zero_boundary_layer(grid, &mut values);
    Ok(Field {
        grid: Arc::clone(grid),
        values,
    })
}
