use super::{solve_dirichlet, Region, SolveParams, SolveResult, Source};
use crate::error::{Error, Result};
use crate::grid::{cylinder_nodes, ParabolicCylinder, ScalarField};
use crate::interface::LevelInterface;
use crate::ops::Operator;

/// Pointwise check of `H(u) = 1` in `Ω` and `|D̃²u| ≤ K` outside, away from
/// a band around `∂Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub band: f64,
    pub tolerance: f64,
    pub k_bound: f64,
    pub omega_nodes: usize,
    /// `sup |H(u) − 1|` over banded `Ω` nodes; `None` if there are none.
    pub omega_residual: Option<f64>,
    pub complement_nodes: usize,
    /// `sup max(|D²u|ᵢⱼ, |∂ₜu|)` over banded complement nodes.
    pub complement_sup: Option<f64>,
    pub omega_pass: bool,
    pub complement_pass: bool,
}

impl ResidualReport {
    pub fn pass(&self) -> bool {
        self.omega_pass && self.complement_pass
    }
}

/// Residual tolerance is `10·h²`. Only the bound `K` is enforced outside `Ω`.
pub fn verify_solution(result: &SolveResult, op: &Operator, params: &SolveParams, band: f64) -> Result<ResidualReport> {
    let f = &result.field;
    let g = f.grid();
    let h = g.h();
    let slack = 1e-9 * h;
    let (mut on, mut off) = (0usize, 0usize);
    let (mut res, mut sup) = (0.0f64, 0.0f64);
    for m in 1..g.nt() {
        let level_mask = result.level_mask(m);
        let iface = LevelInterface::extract(g, level_mask);
        for s in (0..g.spatial_len()).filter(|&s| g.is_spatial_interior(s)) {
            if iface.distance(&g.position(s)) < band - slack {
                continue;
            }
            let d = f.differentials(m, s)?;
            if level_mask[s] {
                on += 1;
                res = res.max((op.eval_h(&d.hess, d.ut)? - 1.0).abs());
            } else {
                off += 1;
                sup = sup.max(d.max_abs());
            }
        }
    }
    let tolerance = 10.0 * h * h;
    Ok(ResidualReport {
        band,
        tolerance,
        k_bound: params.k_bound,
        omega_nodes: on,
        omega_residual: (on > 0).then_some(res),
        complement_nodes: off,
        complement_sup: (off > 0).then_some(sup),
        omega_pass: res <= tolerance,
        complement_pass: sup <= params.k_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompactnessGap {
    /// `sup |H(u)|` over interior nodes of `Q₁`.
    pub delta: f64,
    /// `sup_{Q_{1/2}} |u − v|` with `H(v) = 0`, `v = u` on `∂ₚQ_{1/2}`.
    pub gap: f64,
}

impl CompactnessGap {
    /// Empirical modulus `gap/delta`, if `delta > 0`.
    pub fn modulus(&self) -> Option<f64> {
        (self.delta > 0.0).then(|| self.gap / self.delta)
    }
}

/// `u` must be given on a grid containing `Q₁(0)`.
pub fn compactness_gap(op: &Operator, u: &ScalarField, params: &SolveParams) -> Result<CompactnessGap> {
    let g = u.grid();
    let (q1, _) = cylinder_nodes(g, &ParabolicCylinder::at_origin(1.0))?;
    let mut delta = 0.0f64;
    for idx in q1.iter() {
        let (m, s) = g.unflat(idx);
        let d = u.differentials(m, s)?;
        delta = delta.max(op.eval_h(&d.hess, d.ut)?.abs());
    }
    let half = ParabolicCylinder::at_origin(0.5);
    let (inner, boundary) = cylinder_nodes(g, &half)?;
    if inner.is_empty() {
        return Err(Error::Precondition("Q_{1/2} has no interior nodes".into()));
    }
    let v = solve_dirichlet(op, Region::Cylinder(half), u, Source::Constant(0.0), params)?;
    let gap = inner.union(&boundary).iter().map(|i| (u.values()[i] - v.values()[i]).abs()).fold(0.0, f64::max);
    Ok(CompactnessGap { delta, gap })
}
