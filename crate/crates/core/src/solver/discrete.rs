//! Monotone discretisation of `F` and the per-level Howard iteration.
//!
//! Each time level solves `select_π V_π(u) = 0` where every row
//! `V_π(u)_i = d_π u_i − Σ c_πk u_k − b_π,i` has nonnegative neighbour
//! coefficients and `d_π > Σ c_πk`, so every fixed policy gives an M-matrix.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SpaceTimeGrid;
use crate::matrix::SymMatrix;
use crate::ops::{pucci_net, Operator, OperatorKind};

/// Centered second-difference stencil of `trace(A·D²u)`; the mixed term uses
/// the seven-point form that stays monotone when `a_ii ≥ |a_12|`.
#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    pub center: f64,
    pub nbrs: Vec<(isize, f64)>,
}

impl Stencil {
    pub fn build(a: &SymMatrix, grid: &SpaceTimeGrid) -> Result<Self> {
        let h2 = grid.h() * grid.h();
        if grid.dim() == 1 {
            let a11 = a.a11();
            if a11 <= 0.0 {
                return Err(Error::NonMonotoneStencil { matrix: *a });
            }
            return Ok(Stencil { center: -2.0 * a11 / h2, nbrs: vec![(-1, a11 / h2), (1, a11 / h2)] });
        }
        let (a11, a12, a22) = (a.a11(), a.a12(), a.a22());
        let b = a12.abs();
        if a11 < b || a22 < b || a11 <= 0.0 || a22 <= 0.0 {
            return Err(Error::NonMonotoneStencil { matrix: *a });
        }
        let nx = grid.nx() as isize;
        let mut nbrs = vec![(-1, (a11 - b) / h2), (1, (a11 - b) / h2), (-nx, (a22 - b) / h2), (nx, (a22 - b) / h2)];
        if a12 > 0.0 {
            nbrs.extend([(nx + 1, b / h2), (-nx - 1, b / h2)]);
        } else if a12 < 0.0 {
            nbrs.extend([(nx - 1, b / h2), (-nx + 1, b / h2)]);
        }
        nbrs.retain(|&(_, c)| c != 0.0);
        Ok(Stencil { center: -2.0 * (a11 + a22 - b) / h2, nbrs })
    }

    #[cfg(test)]
    pub fn apply(&self, u: &[f64], s: usize) -> f64 {
        let mut acc = self.center * u[s];
        for &(o, c) in &self.nbrs {
            acc += c * u[(s as isize + o) as usize];
        }
        acc
    }
}

/// Which extremum of the row values defines the equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Select {
    Min,
    Max,
}

/// `F_h(u) = opt_j (L_j u + offset_j)`.
#[derive(Clone, Debug)]
pub(crate) struct DiscreteOperator {
    pub stencils: Vec<Stencil>,
    pub offsets: Vec<f64>,
    /// `Max` for convex (Bellman) families, `Min` for concave ones.
    pub concave: bool,
}

impl DiscreteOperator {
    /// Discretises `M ↦ F(M + shift)`. Pucci kinds use axis-aligned nets, which
    /// are exact in one dimension.
    pub fn new(op: &Operator, shift: Option<&SymMatrix>, grid: &SpaceTimeGrid, net_points: usize) -> Result<Self> {
        if op.dim() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: op.dim() });
        }
        let (family, concave) = match op.kind() {
            OperatorKind::Linear(a) => (vec![*a], false),
            OperatorKind::Bellman(f) => (f.clone(), false),
            OperatorKind::PucciPlus | OperatorKind::PucciMinus => {
                let m = if op.dim() == 1 { 2 } else { net_points.max(2) };
                let net = pucci_net(op.dim(), op.lambda0(), op.lambda1(), m)?;
                let OperatorKind::Bellman(f) = net.kind().clone() else { unreachable!() };
                (f, matches!(op.kind(), OperatorKind::PucciMinus))
            }
        };
        let stencils = family.iter().map(|a| Stencil::build(a, grid)).collect::<Result<Vec<_>>>()?;
        let offsets = family.iter().map(|a| shift.map_or(0.0, |s| a.trace_mul(s))).collect();
        Ok(DiscreteOperator { stencils, offsets, concave })
    }

    #[cfg(test)]
    pub fn eval(&self, u: &[f64], s: usize) -> f64 {
        let vals = self.stencils.iter().zip(&self.offsets).map(|(st, off)| st.apply(u, s) + off);
        if self.concave {
            vals.fold(f64::INFINITY, f64::min)
        } else {
            vals.fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

/// Row family of a level problem. `Row::Identity` encodes `u_i = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Row {
    Identity,
    Policy(usize),
}

/// One implicit time level: unknown nodes, previous level and source.
pub(crate) struct Level<'a> {
    pub grid: &'a SpaceTimeGrid,
    pub unknowns: &'a [usize],
    pub prev: &'a [f64],
    pub source: &'a [f64],
    pub inv_dt: f64,
}

/// Equation assembled from a discrete operator.
pub(crate) struct LevelEquation<'a> {
    pub op: &'a DiscreteOperator,
    /// Add the `u_i = 0` row (obstacle complementarity).
    pub obstacle: bool,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct LevelStats {
    pub policy_iterations: usize,
    pub residual: f64,
    /// Residual after each linear solve.
    pub history: Vec<f64>,
}

impl LevelEquation<'_> {
    fn select(&self) -> Select {
        // convex F: E = max_j E_j = −min_j V_j; obstacle adds a min with u
        if self.op.concave && !self.obstacle {
            Select::Max
        } else {
            Select::Min
        }
    }

    fn rows(&self) -> impl Iterator<Item = Row> + '_ {
        self.obstacle.then_some(Row::Identity).into_iter().chain((0..self.op.stencils.len()).map(Row::Policy))
    }

    /// `(d, rhs)` of row `π` at node `s`; neighbour coefficients are the stencil's.
    fn row_parts(&self, lv: &Level, row: Row, s: usize) -> (f64, f64) {
        match row {
            Row::Identity => (1.0, 0.0),
            Row::Policy(j) => {
                let st = &self.op.stencils[j];
                let rhs = if self.obstacle {
                    // 1 − H(u) ≥ 0 row, with H = F_h − (u − prev)/dt
                    lv.inv_dt * lv.prev[s] + self.op.offsets[j] - 1.0
                } else {
                    self.op.offsets[j] + lv.inv_dt * lv.prev[s] - lv.source[s]
                };
                (lv.inv_dt - st.center, rhs)
            }
        }
    }

    fn row_value(&self, lv: &Level, row: Row, u: &[f64], s: usize) -> f64 {
        let (d, rhs) = self.row_parts(lv, row, s);
        let mut v = d * u[s] - rhs;
        if let Row::Policy(j) = row {
            for &(o, c) in &self.op.stencils[j].nbrs {
                v -= c * u[(s as isize + o) as usize];
            }
        }
        v
    }

    /// `select_π V_π(u)_s`, the discrete equation residual at `s`.
    pub fn residual_at(&self, lv: &Level, u: &[f64], s: usize) -> f64 {
        let vals = self.rows().map(|r| self.row_value(lv, r, u, s));
        match self.select() {
            Select::Min => vals.fold(f64::INFINITY, f64::min),
            Select::Max => vals.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn residual(&self, lv: &Level, u: &[f64]) -> f64 {
        lv.unknowns.par_iter().map(|&s| self.residual_at(lv, u, s).abs()).reduce(|| 0.0, f64::max)
    }

    /// Picks the optimal row per node, keeping the current one on ties.
    fn improve(&self, lv: &Level, u: &[f64], policy: &mut [Row], tie: f64) -> bool {
        let select = self.select();
        let mut changed = false;
        for (k, &s) in lv.unknowns.iter().enumerate() {
            let current = self.row_value(lv, policy[k], u, s);
            let mut best = (policy[k], current);
            for r in self.rows() {
                let v = self.row_value(lv, r, u, s);
                let better = match select {
                    Select::Min => v < best.1,
                    Select::Max => v > best.1,
                };
                if better {
                    best = (r, v);
                }
            }
            let slack = tie.max(1e-13 * (1.0 + current.abs()));
            let improves = match select {
                Select::Min => best.1 < current - slack,
                Select::Max => best.1 > current + slack,
            };
            if improves && best.0 != policy[k] {
                policy[k] = best.0;
                changed = true;
            }
        }
        changed
    }

    /// Howard iteration: alternate linear solves and policy improvement.
    /// `u` holds the initial guess on unknowns and fixed data elsewhere.
    pub fn solve(
        &self,
        lv: &Level,
        u: &mut [f64],
        policy: &mut Vec<Row>,
        policy_cap: usize,
        linear_tol: f64,
        level_index: usize,
    ) -> Result<LevelStats> {
        // inexact 2D solves leave residuals near linear_tol/h²; smaller policy
        // gains are treated as ties so the iteration cannot cycle on noise
        let tie = if lv.grid.dim() == 1 { 0.0 } else { linear_tol / (lv.grid.h() * lv.grid.h()) };
        if policy.len() != lv.unknowns.len() {
            *policy = vec![self.rows().next().expect("non-empty family"); lv.unknowns.len()];
            self.improve(lv, u, policy, tie);
        }
        let mut history = Vec::new();
        for it in 1..=policy_cap {
            self.linear_solve(lv, u, policy, linear_tol, level_index)?;
            history.push(self.residual(lv, u));
            if !self.improve(lv, u, policy, tie) {
                let residual = *history.last().expect("one step taken");
                return Ok(LevelStats { policy_iterations: it, residual, history });
            }
        }
        Err(Error::IterationCap { cap: policy_cap, level: level_index, worst_residual: self.residual(lv, u) })
    }

    fn linear_solve(&self, lv: &Level, u: &mut [f64], policy: &[Row], tol: f64, level: usize) -> Result<()> {
        if lv.grid.dim() == 1 {
            self.thomas(lv, u, policy);
            Ok(())
        } else {
            self.gauss_seidel(lv, u, policy, tol, level)
        }
    }

    /// Direct tridiagonal solve; known nodes enter as identity rows.
    fn thomas(&self, lv: &Level, u: &mut [f64], policy: &[Row]) {
        let n = lv.grid.nx();
        let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; n], vec![1.0; n], vec![0.0; n], u.to_vec());
        for (k, &s) in lv.unknowns.iter().enumerate() {
            let (d, b) = self.row_parts(lv, policy[k], s);
            diag[s] = d;
            rhs[s] = b;
            if let Row::Policy(j) = policy[k] {
                for &(o, c) in &self.op.stencils[j].nbrs {
                    if o < 0 {
                        lower[s] = -c;
                    } else {
                        upper[s] = -c;
                    }
                }
            }
        }
        for i in 1..n {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        u[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            u[i] = (rhs[i] - upper[i] * u[i + 1]) / diag[i];
        }
    }

    fn gauss_seidel(&self, lv: &Level, u: &mut [f64], policy: &[Row], tol: f64, level: usize) -> Result<()> {
        let h2 = lv.grid.h() * lv.grid.h();
        let max_sweeps = 20_000;
        for _ in 0..max_sweeps {
            let mut worst = 0.0f64;
            for (k, &s) in lv.unknowns.iter().enumerate() {
                let (d, b) = self.row_parts(lv, policy[k], s);
                let mut acc = b;
                if let Row::Policy(j) = policy[k] {
                    for &(o, c) in &self.op.stencils[j].nbrs {
                        acc += c * u[(s as isize + o) as usize];
                    }
                }
                let new = acc / d;
                worst = worst.max(((new - u[s]) * d).abs());
                u[s] = new;
            }
            if worst * h2 <= tol {
                return Ok(());
            }
        }
        Err(Error::IterationCap { cap: max_sweeps, level, worst_residual: self.residual_policy(lv, u, policy) })
    }

    fn residual_policy(&self, lv: &Level, u: &[f64], policy: &[Row]) -> f64 {
        lv.unknowns.iter().enumerate().map(|(k, &s)| self.row_value(lv, policy[k], u, s).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_point_stencil_is_exact_on_quadratics() {
        let g = SpaceTimeGrid::new(2, 9, 1.0, 0.0, 0.1, 1.0).unwrap();
        for a in [SymMatrix::two(2.0, 0.7, 1.0), SymMatrix::two(1.5, -0.9, 1.2)] {
            let st = Stencil::build(&a, &g).unwrap();
            let m = SymMatrix::two(0.3, -1.1, 2.0);
            let u: Vec<f64> = (0..g.spatial_len())
                .map(|s| {
                    let x = g.position(s);
                    0.5 * (m.a11() * x[0] * x[0] + 2.0 * m.a12() * x[0] * x[1] + m.a22() * x[1] * x[1]) + x[0]
                })
                .collect();
            let s = g.join([4, 4]);
            assert!((st.apply(&u, s) - a.trace_mul(&m)).abs() < 1e-11);
            assert!(st.nbrs.iter().all(|&(_, c)| c >= 0.0));
        }
    }

    #[test]
    fn rejects_non_monotone_matrix() {
        let g = SpaceTimeGrid::new(2, 9, 1.0, 0.0, 0.1, 1.0).unwrap();
        let bad = SymMatrix::two(1.0, 1.5, 3.0);
        assert!(matches!(Stencil::build(&bad, &g), Err(Error::NonMonotoneStencil { .. })));
    }
}
