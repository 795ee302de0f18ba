//! Polynomial approximation ladder and the oscillation estimates built on it.
//!
//! Starting from `P₀ = 0`, each step zooms `u − Pₖ` into `Q_{1/2}`, solves the
//! shifted equation `F(D²v + M0(Pₖ)) − c0(Pₖ) − ∂ₜv = 0` with that boundary
//! data, and adds the rescaled Taylor polynomial of the solution at the
//! origin. Every member satisfies `H(Pₖ) = 0`.

mod density;

pub use density::{decompose, density_decay, scaled_complement, DecomposeReport, DensityRow, DensityTable};

use crate::error::{Error, Result};
use crate::grid::{cylinder_nodes, rescale_field, ParabolicCylinder, ScalarField, SpaceTimeGrid};
use crate::interface::LevelInterface;
use crate::ops::Operator;
use crate::polynomial::ParabolicPolynomial;
use crate::solver::{solve_dirichlet_shifted, Region, SolveParams, Source};

/// Smallest node count across `Q_{ρᵏ}` for which step `k` is attempted.
pub const MIN_NODES_ACROSS: usize = 8;

/// Errors below this are treated as zero in contraction tests.
pub const ERROR_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LadderOptions {
    pub rho: f64,
    pub k_max: usize,
    /// Spacing of the grid on which each `vₖ` is solved.
    pub target_h: f64,
    pub target_kappa: f64,
    pub params: SolveParams,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions { rho: 0.5, k_max: 8, target_h: 1.0 / 32.0, target_kappa: 0.25, params: SolveParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderStep {
    pub k: usize,
    /// `ρᵏ`.
    pub radius: f64,
    pub poly: ParabolicPolynomial,
    /// `sup_{Q_{ρᵏ}} |u − Pₖ|`.
    pub error: f64,
    /// `error / ρ²ᵏ`.
    pub scaled_error: f64,
    /// `H(Pₖ)`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderResult {
    pub rho: f64,
    pub steps: Vec<LadderStep>,
    /// `max_k eₖ/ρ²ᵏ`.
    pub fitted_c: f64,
    /// `contraction[k]`: `e_{k+1} ≤ 1.5·ρ²·eₖ` (errors floored at [`ERROR_FLOOR`]).
    pub contraction: Vec<bool>,
    /// Largest `k` with `Q_{ρᵏ}` resolved by the source grid.
    pub resolution_limit: usize,
    /// Solver failure that stopped the ladder early.
    pub truncated: Option<String>,
}

impl LadderResult {
    pub fn contracts(&self) -> bool {
        self.contraction.iter().all(|&c| c)
    }

    /// Index of the member whose scale `ρᵏ` is nearest to `r` on a log scale.
    pub fn snap(&self, r: f64) -> usize {
        let k = (r.ln() / self.rho.ln()).round().max(0.0) as usize;
        k.min(self.steps.len() - 1)
    }
}

/// Largest `k ≤ k_max` such that `Q_{ρᵏ}` spans at least
/// [`MIN_NODES_ACROSS`] nodes of `grid`.
pub fn resolution_limit(grid: &SpaceTimeGrid, rho: f64, k_max: usize) -> usize {
    let mut k = 0;
    while k < k_max {
        let across = (2.0 * rho.powi(k as i32 + 1) / grid.h() + 1e-9).floor() as usize + 1;
        if across < MIN_NODES_ACROSS {
            break;
        }
        k += 1;
    }
    k
}

fn difference(u: &ScalarField, p: &ParabolicPolynomial) -> Result<ScalarField> {
    let g = *u.grid();
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (m, s) = g.unflat(i);
            v - p.eval(g.position(s), g.time(m))
        })
        .collect();
    ScalarField::new(g, values)
}

fn sup_on(u: &ScalarField, p: &ParabolicPolynomial, cyl: &ParabolicCylinder) -> Result<f64> {
    let g = u.grid();
    let (a, b) = cylinder_nodes(g, cyl)?;
    Ok(a.union(&b)
        .iter()
        .map(|i| {
            let (m, s) = g.unflat(i);
            (u.values()[i] - p.eval(g.position(s), g.time(m))).abs()
        })
        .fold(0.0, f64::max))
}

/// Runs the ladder at the origin. `u` must cover `Q₁(0)` with `‖u‖∞ ≤ 1` there.
pub fn ladder(u: &ScalarField, op: &Operator, opts: &LadderOptions) -> Result<LadderResult> {
    let g = u.grid();
    let n = g.dim();
    if op.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: op.dim() });
    }
    if !(opts.rho > 0.0 && opts.rho < 1.0) {
        return Err(Error::Precondition(format!("rho={} must lie in (0, 1)", opts.rho)));
    }
    let zero = ParabolicPolynomial::zero(n);
    let sup0 = sup_on(u, &zero, &ParabolicCylinder::at_origin(1.0))?;
    if sup0 > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("sup over Q_1 of |u| is {sup0} > 1")));
    }
    let target_nx = (1.0 / opts.target_h).round() as usize + 1;
    let target = SpaceTimeGrid::new(n, target_nx, 0.5, -0.25, 0.0, opts.target_kappa)?;
    let origin = target.join([target_nx / 2, target_nx / 2]);
    let top = target.nt() - 1;
    let half = ParabolicCylinder::at_origin(0.5);

    let limit = resolution_limit(g, opts.rho, opts.k_max);
    let mut steps = Vec::new();
    let mut p = zero;
    let mut truncated = None;
    for k in 0..=limit {
        let r = opts.rho.powi(k as i32);
        let r2 = r * r;
        let error = if k == 0 { sup0 } else { sup_on(u, &p, &ParabolicCylinder::at_origin(r))? };
        steps.push(LadderStep { k, radius: r, poly: p, error, scaled_error: error / r2, residual: p.residual(op)? });
        if k == limit {
            break;
        }
        let uk = rescale_field(&difference(u, &p)?, ([0.0, 0.0], 0.0), r, target)?;
        let vk = match solve_dirichlet_shifted(
            op,
            &p.m0,
            p.c0,
            Region::Cylinder(half),
            &uk,
            Source::Constant(0.0),
            &opts.params,
        ) {
            Ok(v) => v,
            Err(e) => {
                truncated = Some(format!("step {k}: {e}"));
                break;
            }
        };
        let d = vk.differentials(top, origin)?;
        let m_hat = d.hess;
        // H_k(P̂) = 0 fixes the time coefficient
        let c_hat = op.eval_f(&(p.m0 + m_hat))? - p.c0;
        p = ParabolicPolynomial {
            a0: p.a0 + r2 * vk.at(top, origin),
            b0: [p.b0[0] + r * d.grad[0], p.b0[1] + r * d.grad[1]],
            m0: p.m0 + m_hat,
            c0: p.c0 + c_hat,
        };
    }
    let fitted_c = steps.iter().map(|s| s.scaled_error).fold(0.0, f64::max);
    let contraction = steps
        .windows(2)
        .map(|w| w[1].error.max(ERROR_FLOOR) <= (1.5 * opts.rho * opts.rho * w[0].error).max(ERROR_FLOOR))
        .collect();
    Ok(LadderResult { rho: opts.rho, steps, fitted_c, contraction, resolution_limit: limit, truncated })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BmoRow {
    pub r: f64,
    pub k: usize,
    pub snapped: f64,
    pub poly: ParabolicPolynomial,
    pub sup: f64,
    /// `sup / snapped²`.
    pub ratio: f64,
}

/// `sup_{Q_r}|u − P_r|/r²` with `P_r` the ladder member at the nearest scale `ρᵏ`.
pub fn pointwise_bmo(ladder: &LadderResult, radii: &[f64]) -> Vec<BmoRow> {
    radii
        .iter()
        .map(|&r| {
            let st = &ladder.steps[ladder.snap(r)];
            BmoRow { r, k: st.k, snapped: st.radius, poly: st.poly, sup: st.error, ratio: st.scaled_error }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpBmoRow {
    pub k: usize,
    /// Radius `ρᵏ/2` of the averaging cylinder.
    pub radius: f64,
    pub mean: f64,
    pub nodes: usize,
    /// Nodes dropped within the interface band.
    pub excluded: usize,
}

/// `((1/|Q_{ρᵏ/2}|) ∫ |D̃²u − D̃²Pₖ|^p)^{1/p}` as a node average over the
/// interior of `Q_{ρᵏ/2}`. With `exclusion = (mask, band)` nodes closer than
/// `band` to the mask interface are skipped.
pub fn lp_bmo(
    u: &ScalarField,
    ladder: &LadderResult,
    p: f64,
    exclusion: Option<(&[bool], f64)>,
) -> Result<Vec<LpBmoRow>> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Precondition(format!("p={p} must lie in [1, inf)")));
    }
    let g = u.grid();
    let sl = g.spatial_len();
    let ifaces: Option<Vec<LevelInterface>> = exclusion
        .map(|(mask, _)| (0..g.nt()).map(|m| LevelInterface::extract(g, &mask[m * sl..(m + 1) * sl])).collect());
    let mut rows = Vec::new();
    for st in &ladder.steps {
        let radius = 0.5 * st.radius;
        if radius < g.h() {
            break;
        }
        let (interior, _) = cylinder_nodes(g, &ParabolicCylinder::at_origin(radius))?;
        let (mut acc, mut nodes, mut excluded) = (0.0, 0usize, 0usize);
        for idx in interior.iter() {
            let (m, s) = g.unflat(idx);
            if let (Some(ifs), Some((_, band))) = (&ifaces, exclusion) {
                if ifs[m].distance(&g.position(s)) < band {
                    excluded += 1;
                    continue;
                }
            }
            let d = u.differentials(m, s)?;
            acc += st.poly.tilde_distance(&d.hess, d.ut).powf(p);
            nodes += 1;
        }
        let mean = if nodes > 0 { (acc / nodes as f64).powf(1.0 / p) } else { 0.0 };
        rows.push(LpBmoRow { k: st.k, radius, mean, nodes, excluded });
    }
    Ok(rows)
}

/// `ũ(x, t) = u(x/R, t/R²)` on the grid stretched by `R` in space and `R²`
/// in time, with `F_R(M) = F(R²M)/R²`. Node values are carried over
/// unchanged. Since `D̃²ũ = D̃²u/R²` and every kind is positively
/// homogeneous, `H_R(ũ) = H(u)/R²`.
pub fn normalize(u: &ScalarField, op: &Operator, big_r: f64) -> Result<(ScalarField, Operator)> {
    if !(big_r >= 1.0 && big_r.is_finite()) {
        return Err(Error::Precondition(format!("R={big_r} must be >= 1")));
    }
    let g = u.grid();
    let r2 = big_r * big_r;
    let stretched =
        SpaceTimeGrid::from_levels(g.dim(), g.nx(), big_r * g.half_width(), r2 * g.t_start(), r2 * g.t_end(), g.nt())?;
    Ok((ScalarField::new(stretched, u.values().to_vec())?, op.rescaled(big_r)))
}

#[cfg(test)]
mod tests;
