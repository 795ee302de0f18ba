//! Uniform space-time grids with parabolic step coupling, nodal fields and
//! their discrete derivatives.
//!
//! A grid covers `[−L, L]ⁿ × [t_start, t_end]` with `nx` nodes per spatial
//! axis and a uniform time step `dt ≤ κh²`. Nodes are stored time-major, then
//! row-major in space: flat index `m·S + i + nx·j` where `m` is the time
//! level, `i` the `x₁` index, `j` the `x₂` index and `S = nxⁿ`.

mod cylinder;
pub mod io;

pub use cylinder::{cylinder_nodes, measure, sup_norm, NodeSet, ParabolicCylinder};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Relative slack used when testing whether points lie on grid features.
const GEOM_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimeGrid {
    n: usize,
    nx: usize,
    half_width: f64,
    t_start: f64,
    t_end: f64,
    nt: usize,
}

impl SpaceTimeGrid {
    /// Builds a grid with `dt = (t_end − t_start)/⌈(t_end − t_start)/(κh²)⌉`,
    /// i.e. the largest uniform step not exceeding `κh²`.
    pub fn new(n: usize, nx: usize, half_width: f64, t_start: f64, t_end: f64, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidGrid(format!("kappa={kappa} must be positive")));
        }
        let h = 2.0 * half_width / (nx.max(2) - 1) as f64;
        let span = t_end - t_start;
        let steps = if span > 0.0 { (span / (kappa * h * h) - GEOM_EPS).ceil().max(1.0) as usize } else { 0 };
        Self::from_levels(n, nx, half_width, t_start, t_end, steps + 1)
    }

    /// Builds a grid from its level count, as stored in field headers.
    pub fn from_levels(n: usize, nx: usize, half_width: f64, t_start: f64, t_end: f64, nt: usize) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::InvalidGrid(format!("n must be 1 or 2, got {n}")));
        }
        if nx < 5 {
            return Err(Error::InvalidGrid(format!("nx={nx} must be at least 5")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("L={half_width} must be positive")));
        }
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidGrid(format!("time interval [{t_start}, {t_end}] is empty")));
        }
        if nt < 2 {
            return Err(Error::InvalidGrid(format!("nt={nt} must be at least 2")));
        }
        Ok(SpaceTimeGrid { n, nx, half_width, t_start, t_end, nt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn t_start(&self) -> f64 {
        self.t_start
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.nx - 1) as f64
    }
    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.nt - 1) as f64
    }
    /// Effective parabolic coupling `dt/h²`.
    pub fn kappa(&self) -> f64 {
        self.dt() / (self.h() * self.h())
    }
    /// Nodes per time level.
    pub fn spatial_len(&self) -> usize {
        if self.n == 1 {
            self.nx
        } else {
            self.nx * self.nx
        }
    }
    pub fn len(&self) -> usize {
        self.spatial_len() * self.nt
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Volume of one space-time cell, `hⁿ·dt`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.n as i32) * self.dt()
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }
    pub fn time(&self, level: usize) -> f64 {
        if level + 1 == self.nt {
            self.t_end
        } else {
            self.t_start + level as f64 * self.dt()
        }
    }

    /// Spatial multi-index of a spatial flat index.
    pub fn split(&self, s: usize) -> [usize; 2] {
        if self.n == 1 {
            [s, 0]
        } else {
            [s % self.nx, s / self.nx]
        }
    }
    pub fn join(&self, ix: [usize; 2]) -> usize {
        if self.n == 1 {
            ix[0]
        } else {
            ix[0] + self.nx * ix[1]
        }
    }
    pub fn position(&self, s: usize) -> [f64; 2] {
        let ix = self.split(s);
        if self.n == 1 {
            [self.coord(ix[0]), 0.0]
        } else {
            [self.coord(ix[0]), self.coord(ix[1])]
        }
    }
    pub fn flat(&self, level: usize, s: usize) -> usize {
        level * self.spatial_len() + s
    }
    /// `(level, spatial index)` of a flat index.
    pub fn unflat(&self, idx: usize) -> (usize, usize) {
        (idx / self.spatial_len(), idx % self.spatial_len())
    }

    /// Whether every centered spatial stencil neighbour of `s` exists.
    pub fn is_spatial_interior(&self, s: usize) -> bool {
        let ix = self.split(s);
        let ok = |i: usize| i >= 1 && i + 1 < self.nx;
        ok(ix[0]) && (self.n == 1 || ok(ix[1]))
    }

    /// Index of the node nearest to coordinate `x` on one axis, if inside.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let f = (x + self.half_width) / self.h();
        let i = f.round();
        if i < 0.0 || i > (self.nx - 1) as f64 {
            None
        } else {
            Some(i as usize)
        }
    }

    pub fn nearest_level(&self, t: f64) -> Option<usize> {
        let f = (t - self.t_start) / self.dt();
        let m = f.round();
        if m < 0.0 || m > (self.nt - 1) as f64 {
            None
        } else {
            Some(m as usize)
        }
    }

    /// Flat index of the node nearest to `(x, t)`, or an error if outside.
    pub fn locate(&self, x: &[f64], t: f64) -> Result<usize> {
        let outside = || Error::OutsideGrid { x: [x[0], x.get(1).copied().unwrap_or(0.0)], t };
        let level = self.nearest_level(t).ok_or_else(outside)?;
        let i = self.nearest_index(x[0]).ok_or_else(outside)?;
        let j = if self.n == 2 { self.nearest_index(x[1]).ok_or_else(outside)? } else { 0 };
        Ok(self.flat(level, self.join([i, j])))
    }

    /// Whether a point lies inside the grid box, up to rounding.
    pub fn contains(&self, x: &[f64], t: f64) -> bool {
        let sx = GEOM_EPS * self.half_width;
        let st = GEOM_EPS * (self.t_end - self.t_start);
        x.iter().take(self.n).all(|v| v.abs() <= self.half_width + sx) && t >= self.t_start - st && t <= self.t_end + st
    }
}

/// Nodal values of `u` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: SpaceTimeGrid,
    values: Vec<f64>,
}

/// Discrete `(∇u, D²u, ∂ₜu)` at a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Differentials {
    pub grad: [f64; 2],
    pub hess: SymMatrix,
    pub ut: f64,
}

impl Differentials {
    /// `max(|D²u| entrywise, |∂ₜu|)`.
    pub fn max_abs(&self) -> f64 {
        self.hess.max_abs_entry().max(self.ut.abs())
    }
}

impl ScalarField {
    pub fn new(grid: SpaceTimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "value array has {} entries, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at flat index {i}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: SpaceTimeGrid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f(x, t)` at every node.
    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn([f64; 2], f64) -> f64) -> Self {
        let sl = grid.spatial_len();
        let positions: Vec<[f64; 2]> = (0..sl).map(|s| grid.position(s)).collect();
        let mut values = Vec::with_capacity(grid.len());
        for m in 0..grid.nt() {
            let t = grid.time(m);
            values.extend(positions.iter().map(|&x| f(x, t)));
        }
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
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
    pub fn at(&self, level: usize, s: usize) -> f64 {
        self.values[self.grid.flat(level, s)]
    }
    pub fn level(&self, level: usize) -> &[f64] {
        let sl = self.grid.spatial_len();
        &self.values[level * sl..(level + 1) * sl]
    }
    pub fn level_mut(&mut self, level: usize) -> &mut [f64] {
        let sl = self.grid.spatial_len();
        &mut self.values[level * sl..(level + 1) * sl]
    }

    /// Centered second differences (four-point cross term), centered first
    /// differences and a backward time difference. Exact on polynomials of
    /// degree ≤ 2 in `x` and ≤ 1 in `t`.
    pub fn differentials(&self, level: usize, s: usize) -> Result<Differentials> {
        let g = &self.grid;
        if level == 0 || level >= g.nt() || !g.is_spatial_interior(s) {
            return Err(Error::StencilOutOfGrid { level, index: g.split(s) });
        }
        let u = self.level(level);
        let h = g.h();
        let h2 = h * h;
        let c = u[s];
        let ut = (c - self.at(level - 1, s)) / (g.time(level) - g.time(level - 1));
        if g.dim() == 1 {
            let (l, r) = (u[s - 1], u[s + 1]);
            return Ok(Differentials {
                grad: [(r - l) / (2.0 * h), 0.0],
                hess: SymMatrix::one((r - 2.0 * c + l) / h2),
                ut,
            });
        }
        let nx = g.nx();
        let (w, e, so, no) = (u[s - 1], u[s + 1], u[s - nx], u[s + nx]);
        let (ne, nw, se, sw) = (u[s + nx + 1], u[s + nx - 1], u[s - nx + 1], u[s - nx - 1]);
        Ok(Differentials {
            grad: [(e - w) / (2.0 * h), (no - so) / (2.0 * h)],
            hess: SymMatrix::two((e - 2.0 * c + w) / h2, (ne - nw - se + sw) / (4.0 * h2), (no - 2.0 * c + so) / h2),
            ut,
        })
    }

    /// Spatial gradient with centered differences, one-sided at the box edges.
    pub fn gradient_anywhere(&self, level: usize, s: usize) -> [f64; 2] {
        level_gradient(&self.grid, self.level(level), s)
    }

    /// Multilinear interpolation in space, linear in time.
    pub fn sample(&self, x: &[f64], t: f64) -> Result<f64> {
        let g = &self.grid;
        if !g.contains(x, t) {
            return Err(Error::OutsideGrid { x: [x[0], x.get(1).copied().unwrap_or(0.0)], t });
        }
        let bracket = |v: f64, max: usize, step: f64, origin: f64| -> (usize, f64) {
            let f = ((v - origin) / step).clamp(0.0, max as f64);
            let i = (f.floor() as usize).min(max - 1);
            (i, f - i as f64)
        };
        let (m, wt) = bracket(t, g.nt() - 1, g.dt(), g.t_start());
        let (i, wx) = bracket(x[0], g.nx() - 1, g.h(), -g.half_width());
        let spatial = |level: usize| -> f64 {
            let u = self.level(level);
            if g.dim() == 1 {
                lerp(u[i], u[i + 1], wx)
            } else {
                let (j, wy) = bracket(x[1], g.nx() - 1, g.h(), -g.half_width());
                let s = g.join([i, j]);
                let nx = g.nx();
                lerp(lerp(u[s], u[s + 1], wx), lerp(u[s + nx], u[s + nx + 1], wx), wy)
            }
        };
        if wt == 0.0 {
            return Ok(spatial(m));
        }
        Ok(lerp(spatial(m), spatial(m + 1), wt))
    }

    /// Builds a field on `target` by sampling this field at `map(y, τ)` and
    /// post-processing each sample with `post(value, y, τ)`.
    pub fn resample(
        &self,
        target: SpaceTimeGrid,
        map: impl Fn([f64; 2], f64) -> ([f64; 2], f64),
        post: impl Fn(f64, [f64; 2], f64) -> f64,
    ) -> Result<ScalarField> {
        let sl = target.spatial_len();
        let mut values = Vec::with_capacity(target.len());
        for m in 0..target.nt() {
            let tau = target.time(m);
            for s in 0..sl {
                let y = target.position(s);
                let (x, t) = map(y, tau);
                values.push(post(self.sample(&x[..self.grid.dim()], t)?, y, tau));
            }
        }
        ScalarField::new(target, values)
    }
}

/// Gradient of one time slice at spatial node `s`, one-sided at the edges.
pub fn level_gradient(g: &SpaceTimeGrid, u: &[f64], s: usize) -> [f64; 2] {
    let h = g.h();
    let ix = g.split(s);
    let mut grad = [0.0; 2];
    for (axis, slot) in grad.iter_mut().enumerate().take(g.dim()) {
        let stride = if axis == 0 { 1 } else { g.nx() };
        let i = ix[axis];
        *slot = if i == 0 {
            (u[s + stride] - u[s]) / h
        } else if i + 1 == g.nx() {
            (u[s] - u[s - stride]) / h
        } else {
            (u[s + stride] - u[s - stride]) / (2.0 * h)
        };
    }
    grad
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    if w == 0.0 {
        a
    } else {
        a + (b - a) * w
    }
}

/// Parabolic rescaling `u_r(y, τ) = u(x⁰ + r y, t⁰ + r² τ)/r²` sampled on `target`.
pub fn rescale_field(f: &ScalarField, center: ([f64; 2], f64), r: f64, target: SpaceTimeGrid) -> Result<ScalarField> {
    let (x0, t0) = center;
    let r2 = r * r;
    f.resample(target, |y, tau| ([x0[0] + r * y[0], x0[1] + r * y[1]], t0 + r2 * tau), |v, _, _| v / r2)
}
