//! Discrete solvers for `F(D²u) − ∂ₜu = g`.
//!
//! Time stepping is backward Euler. Every level is a monotone nonlinear
//! system solved by Howard policy iteration: a tridiagonal direct solve per
//! policy in one dimension, Gauss-Seidel in two.
//!
//! [`solve_free_boundary`] couples the level solve to an outer fixed point on
//! the active set `Ω`, with membership `|u| > θ_u` (mode A) or
//! `|∇u| > θ_g` (mode B).

pub(crate) mod discrete;
mod verify;

use serde::{Deserialize, Serialize};

pub use verify::{compactness_gap, verify_solution, CompactnessGap, ResidualReport};

use crate::error::{Error, Result};
use crate::grid::{cylinder_nodes, level_gradient, ParabolicCylinder, ScalarField, SpaceTimeGrid};
use crate::matrix::SymMatrix;
use crate::ops::Operator;
use discrete::{DiscreteOperator, Level, LevelEquation, Row};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveParams {
    pub policy_cap: usize,
    /// Linear-solve stopping tolerance on `h²·|residual|`.
    pub linear_tol: f64,
    pub outer_cap: usize,
    /// Mode-A threshold; defaults to `10·h²·scale`.
    pub theta_u: Option<f64>,
    /// Mode-B threshold; defaults to `10·h·scale`.
    pub theta_g: Option<f64>,
    /// Bound on `|D̃²u|` outside `Ω`.
    pub k_bound: f64,
    /// Relaxation of the iterate that defines the next mask; 1 means none.
    pub damping: f64,
    /// Samples per axis of the Pucci net in two dimensions.
    pub net_points: usize,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            policy_cap: 200,
            linear_tol: 1e-10,
            outer_cap: 50,
            theta_u: None,
            theta_g: None,
            k_bound: 10.0,
            damping: 1.0,
            net_points: 2,
        }
    }
}

impl SolveParams {
    pub fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Precondition(format!("solver parameter {what}")));
        if self.policy_cap < 1 {
            return bad("policy_cap must be >= 1");
        }
        if self.outer_cap < 1 {
            return bad("outer_cap must be >= 1");
        }
        if !(self.linear_tol > 0.0 && self.linear_tol.is_finite()) {
            return bad("linear_tol must be positive");
        }
        if !(self.k_bound > 0.0 && self.k_bound.is_finite()) {
            return bad("k_bound must be positive");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if self.net_points < 2 {
            return bad("net_points must be >= 2");
        }
        for (name, v) in [("theta_u", self.theta_u), ("theta_g", self.theta_g)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(&format!("{name} must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Which set the active region must contain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// `Ω ⊃ {u ≠ 0}`.
    A,
    /// `Ω ⊃ {∇u ≠ 0}`.
    B,
}

/// Where a Dirichlet problem is posed. Nodes outside the interior keep the
/// values of the data field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Box,
    Cylinder(ParabolicCylinder),
}

#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    Constant(f64),
    Field(&'a ScalarField),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelReport {
    pub outer_iterations: usize,
    pub policy_iterations: usize,
    pub converged: bool,
    /// The mask update entered a two-cycle.
    pub cycle_resolved: bool,
    /// Mode-A nodes held at `±θ` to break a two-cycle.
    pub pinned: usize,
    /// Discrete residual of the final level solve.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub field: ScalarField,
    /// `Ω` used in the final solve of every level.
    pub mask: Vec<bool>,
    /// The outer update applied to the returned iterate; equal to `mask` on
    /// converged levels.
    pub next_mask: Vec<bool>,
    pub mode: Mode,
    pub levels: Vec<LevelReport>,
    /// Membership threshold applied.
    pub theta: f64,
}

impl SolveResult {
    /// Wraps a known field and mask, e.g. an exact solution.
    pub fn from_exact(field: ScalarField, mask: Vec<bool>, mode: Mode) -> Result<Self> {
        if mask.len() != field.grid().len() {
            return Err(Error::Precondition(format!(
                "mask has {} entries for {} nodes",
                mask.len(),
                field.grid().len()
            )));
        }
        let levels = vec![LevelReport { converged: true, ..Default::default() }; field.grid().nt()];
        Ok(SolveResult { next_mask: mask.clone(), mask, mode, levels, theta: 0.0, field })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        self.field.grid()
    }

    pub fn converged(&self) -> bool {
        self.levels.iter().all(|l| l.converged)
    }

    pub fn level_mask(&self, level: usize) -> &[bool] {
        let sl = self.grid().spatial_len();
        &self.mask[level * sl..(level + 1) * sl]
    }

    pub fn max_residual(&self) -> f64 {
        self.levels.iter().map(|l| l.residual).fold(0.0, f64::max)
    }
}

/// `sup |data|` over the initial level and the lateral boundary, or 1 if zero.
pub fn field_scale(data: &ScalarField) -> f64 {
    let g = data.grid();
    let mut sup = data.level(0).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for m in 1..g.nt() {
        let level = data.level(m);
        for s in (0..g.spatial_len()).filter(|&s| !g.is_spatial_interior(s)) {
            sup = sup.max(level[s].abs());
        }
    }
    if sup > 0.0 {
        sup
    } else {
        1.0
    }
}

/// Solves `F(D²u) − ∂ₜu = g` in `region`, with `u = data` on its parabolic boundary.
pub fn solve_dirichlet(
    op: &Operator,
    region: Region,
    data: &ScalarField,
    source: Source,
    params: &SolveParams,
) -> Result<ScalarField> {
    dirichlet(op, None, 0.0, region, data, source, params)
}

/// As [`solve_dirichlet`] for the shifted operator `F(D²u + S) − c − ∂ₜu`.
pub fn solve_dirichlet_shifted(
    op: &Operator,
    shift: &SymMatrix,
    c: f64,
    region: Region,
    data: &ScalarField,
    source: Source,
    params: &SolveParams,
) -> Result<ScalarField> {
    if shift.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: shift.dim() });
    }
    dirichlet(op, Some(shift), c, region, data, source, params)
}

fn dirichlet(
    op: &Operator,
    shift: Option<&SymMatrix>,
    c: f64,
    region: Region,
    data: &ScalarField,
    source: Source,
    params: &SolveParams,
) -> Result<ScalarField> {
    params.check()?;
    let grid = *data.grid();
    let dop = DiscreteOperator::new(op, shift, &grid, params.net_points)?;
    let eq = LevelEquation { op: &dop, obstacle: false };
    let sl = grid.spatial_len();

    let (levels, unknowns): (Vec<usize>, Vec<Vec<usize>>) = match region {
        Region::Box => {
            let inner: Vec<usize> = (0..sl).filter(|&s| grid.is_spatial_interior(s)).collect();
            ((1..grid.nt()).collect(), vec![inner; grid.nt() - 1])
        }
        Region::Cylinder(cyl) => {
            let (interior, _) = cylinder_nodes(&grid, &cyl)?;
            let mut per_level: Vec<(usize, Vec<usize>)> = Vec::new();
            for idx in interior.iter() {
                let (m, s) = grid.unflat(idx);
                match per_level.last_mut() {
                    Some((lm, v)) if *lm == m => v.push(s),
                    _ => per_level.push((m, vec![s])),
                }
            }
            per_level.into_iter().unzip()
        }
    };

    let mut field = data.clone();
    let mut policy = Vec::new();
    let mut src = vec![0.0; sl];
    for (&m, unk) in levels.iter().zip(&unknowns) {
        match source {
            Source::Constant(g) => src.iter_mut().for_each(|v| *v = g + c),
            Source::Field(f) => {
                if f.grid() != &grid {
                    return Err(Error::Precondition("source field lives on a different grid".into()));
                }
                src.iter_mut().zip(f.level(m)).for_each(|(v, g)| *v = g + c);
            }
        }
        let prev = field.level(m - 1).to_vec();
        let u = field.level_mut(m);
        for &s in unk {
            u[s] = prev[s];
        }
        let lv = Level {
            grid: &grid,
            unknowns: unk,
            prev: &prev,
            source: &src,
            inv_dt: 1.0 / (grid.time(m) - grid.time(m - 1)),
        };
        if policy.len() != unk.len() {
            policy.clear();
        }
        eq.solve(&lv, u, &mut policy, params.policy_cap, params.linear_tol, m)?;
    }
    Ok(field)
}

fn membership(grid: &SpaceTimeGrid, u: &[f64], mode: Mode, theta: f64, out: &mut [bool]) {
    for (s, slot) in out.iter_mut().enumerate() {
        *slot = match mode {
            Mode::A => u[s].abs() > theta,
            Mode::B => {
                let g = level_gradient(grid, u, s);
                g[0].hypot(g[1]) > theta
            }
        };
    }
}

/// Membership mask `|u| > θ` (mode A) or `|∇u| > θ` (mode B) of a whole field.
pub fn membership_mask(field: &ScalarField, mode: Mode, theta: f64) -> Vec<bool> {
    let g = field.grid();
    let sl = g.spatial_len();
    let mut mask = vec![false; g.len()];
    for m in 0..g.nt() {
        membership(g, field.level(m), mode, theta, &mut mask[m * sl..(m + 1) * sl]);
    }
    mask
}

/// Whether a spatial neighbour of `s` at the previous level lies beyond
/// `theta` with the sign of `value`.
fn borders_phase(grid: &SpaceTimeGrid, prev: &[f64], s: usize, value: f64, theta: f64) -> bool {
    let ix = grid.split(s);
    let reach = if grid.dim() == 1 { [1, 0] } else { [1, 1] };
    for d1 in -(reach[1] as isize)..=reach[1] as isize {
        for d0 in -1isize..=1 {
            let (i, j) = (ix[0] as isize + d0, ix[1] as isize + d1);
            if (d0, d1) == (0, 0) || i < 0 || j < 0 || i >= grid.nx() as isize || j >= grid.nx() as isize {
                continue;
            }
            let v = prev[grid.join([i as usize, j as usize])];
            if v * value.signum() > theta {
                return true;
            }
        }
    }
    false
}

/// Default membership threshold for `data` on its grid.
pub fn default_theta(data: &ScalarField, mode: Mode) -> f64 {
    let h = data.grid().h();
    match mode {
        Mode::A => 10.0 * h * h * field_scale(data),
        Mode::B => 10.0 * h * field_scale(data),
    }
}

/// Free-boundary solve on the full grid box. `data` supplies the initial
/// level and the lateral boundary values; its interior values are ignored.
pub fn solve_free_boundary(op: &Operator, data: &ScalarField, mode: Mode, params: &SolveParams) -> Result<SolveResult> {
    params.check()?;
    let grid = *data.grid();
    let theta = match mode {
        Mode::A => params.theta_u,
        Mode::B => params.theta_g,
    }
    .unwrap_or_else(|| default_theta(data, mode));
    let dop = DiscreteOperator::new(op, None, &grid, params.net_points)?;
    let eq = LevelEquation { op: &dop, obstacle: false };
    let sl = grid.spatial_len();
    let unknowns: Vec<usize> = (0..sl).filter(|&s| grid.is_spatial_interior(s)).collect();

    let mut field = data.clone();
    let mut mask = vec![false; grid.len()];
    let mut next_mask = vec![false; grid.len()];
    membership(&grid, field.level(0), mode, theta, &mut mask[..sl]);
    next_mask[..sl].copy_from_slice(&mask[..sl]);
    let mut levels = vec![LevelReport { converged: true, ..Default::default() }];

    let mut policy: Vec<Row> = Vec::new();
    let mut src = vec![0.0; sl];
    let mut relaxed = vec![0.0; sl];
    let mut current = vec![false; sl];
    let mut candidate = vec![false; sl];
    let mut pinned = vec![false; sl];
    for m in 1..grid.nt() {
        let prev = field.level(m - 1).to_vec();
        {
            let u = field.level_mut(m);
            for &s in &unknowns {
                u[s] = prev[s];
            }
            relaxed.copy_from_slice(u);
        }
        membership(&grid, &relaxed, mode, theta, &mut current);
        pinned.iter_mut().for_each(|p| *p = false);
        let mut free = unknowns.clone();
        let mut report = LevelReport::default();
        let inv_dt = 1.0 / (grid.time(m) - grid.time(m - 1));
        let mut earlier: Option<Vec<bool>> = None;
        let mut accumulate = false;
        for outer in 1..=params.outer_cap {
            for (v, &inside) in src.iter_mut().zip(&current) {
                *v = if inside { 1.0 } else { 0.0 };
            }
            let lv = Level { grid: &grid, unknowns: &free, prev: &prev, source: &src, inv_dt };
            let u = field.level_mut(m);
            let stats = eq.solve(&lv, u, &mut policy, params.policy_cap, params.linear_tol, m)?;
            report.outer_iterations = outer;
            report.policy_iterations += stats.policy_iterations;
            report.residual = stats.residual;
            let mut repinned = false;
            if mode == Mode::A {
                // passing through zero lets χ take any value in [0, 1]; stop there
                // unless the node already borders the phase it would enter
                for &s in &free {
                    if prev[s] * u[s] < 0.0 && u[s].abs() > theta && !borders_phase(&grid, &prev, s, u[s], theta) {
                        pinned[s] = true;
                        u[s] = 0.0;
                        relaxed[s] = 0.0;
                        repinned = true;
                    }
                }
                if repinned {
                    free.retain(|&s| !pinned[s]);
                }
            }
            for (w, v) in relaxed.iter_mut().zip(u.iter()) {
                *w += params.damping * (v - *w);
            }
            membership(&grid, &relaxed, mode, theta, &mut candidate);
            if earlier.as_deref() == Some(&candidate[..]) {
                // a node whose value straddles the threshold under both sources
                // makes the plain update alternate
                report.cycle_resolved = true;
                if mode == Mode::A {
                    // χ is set-valued there: hold u at the threshold, which an
                    // intermediate source value attains; |u| = θ leaves it in Λ
                    for &s in &unknowns {
                        if candidate[s] != current[s] && !pinned[s] {
                            pinned[s] = true;
                            u[s] = theta.copysign(relaxed[s]);
                            relaxed[s] = u[s];
                            candidate[s] = false;
                            repinned = true;
                        }
                    }
                    free.retain(|&s| !pinned[s]);
                }
                // Ω only grows from here, which keeps Ω ⊃ {membership} and terminates
                accumulate |= !repinned;
            }
            report.pinned = pinned.iter().filter(|&&p| p).count();
            if accumulate {
                candidate.iter_mut().zip(&current).for_each(|(c, &o)| *c |= o);
            }
            if candidate == current && !repinned {
                report.converged = true;
                break;
            }
            if outer < params.outer_cap {
                earlier = Some(current.clone());
                std::mem::swap(&mut current, &mut candidate);
            }
        }
        mask[m * sl..(m + 1) * sl].copy_from_slice(&current);
        next_mask[m * sl..(m + 1) * sl].copy_from_slice(&candidate);
        levels.push(report);
    }
    Ok(SolveResult { field, mask, next_mask, mode, levels, theta })
}

/// Obstacle formulation `min(u, 1 − H(u)) = 0` solved by the same Howard
/// iteration with an extra identity row; a cross-check for mode A with
/// nonnegative data. Requires a convex operator.
pub fn solve_obstacle(op: &Operator, data: &ScalarField, params: &SolveParams) -> Result<SolveResult> {
    params.check()?;
    if !op.is_convex() {
        return Err(Error::Precondition("obstacle formulation needs a convex operator".into()));
    }
    if data.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Precondition("obstacle formulation needs nonnegative data".into()));
    }
    let grid = *data.grid();
    let dop = DiscreteOperator::new(op, None, &grid, params.net_points)?;
    let eq = LevelEquation { op: &dop, obstacle: true };
    let sl = grid.spatial_len();
    let unknowns: Vec<usize> = (0..sl).filter(|&s| grid.is_spatial_interior(s)).collect();
    let src = vec![0.0; sl];
    let mut field = data.clone();
    let mut levels = vec![LevelReport { converged: true, ..Default::default() }];
    let mut policy = Vec::new();
    for m in 1..grid.nt() {
        let prev = field.level(m - 1).to_vec();
        let u = field.level_mut(m);
        for &s in &unknowns {
            u[s] = prev[s];
        }
        let inv_dt = 1.0 / (grid.time(m) - grid.time(m - 1));
        let lv = Level { grid: &grid, unknowns: &unknowns, prev: &prev, source: &src, inv_dt };
        let stats = eq.solve(&lv, u, &mut policy, params.policy_cap, params.linear_tol, m)?;
        levels.push(LevelReport {
            outer_iterations: 1,
            policy_iterations: stats.policy_iterations,
            converged: true,
            cycle_resolved: false,
            pinned: 0,
            residual: stats.residual,
        });
    }
    let mask: Vec<bool> = field.values().iter().map(|&v| v > 0.0).collect();
    Ok(SolveResult { next_mask: mask.clone(), mask, mode: Mode::A, levels, theta: 0.0, field })
}

/// Residual histories of every Howard solve in a box Dirichlet problem;
/// exposed for convergence diagnostics.
pub fn policy_residual_histories(
    op: &Operator,
    data: &ScalarField,
    source: Source,
    params: &SolveParams,
) -> Result<Vec<Vec<f64>>> {
    params.check()?;
    let grid = *data.grid();
    let dop = DiscreteOperator::new(op, None, &grid, params.net_points)?;
    let eq = LevelEquation { op: &dop, obstacle: false };
    let sl = grid.spatial_len();
    let unknowns: Vec<usize> = (0..sl).filter(|&s| grid.is_spatial_interior(s)).collect();
    let mut field = data.clone();
    let mut out = Vec::new();
    let mut src = vec![0.0; sl];
    for m in 1..grid.nt() {
        match source {
            Source::Constant(g) => src.iter_mut().for_each(|v| *v = g),
            Source::Field(f) => src.copy_from_slice(f.level(m)),
        }
        let prev = field.level(m - 1).to_vec();
        let u = field.level_mut(m);
        for &s in &unknowns {
            u[s] = prev[s];
        }
        let inv_dt = 1.0 / (grid.time(m) - grid.time(m - 1));
        let lv = Level { grid: &grid, unknowns: &unknowns, prev: &prev, source: &src, inv_dt };
        let mut policy = Vec::new();
        out.push(eq.solve(&lv, u, &mut policy, params.policy_cap, params.linear_tol, m)?.history);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
