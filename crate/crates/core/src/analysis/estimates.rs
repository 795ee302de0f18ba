use crate::error::{Error, Result};
use crate::grid::{cylinder_nodes, ParabolicCylinder};
use crate::interface::{extract_all, in_closure, LevelInterface};
use crate::solver::{Mode, SolveResult};

/// Flat index of the grid node at `x0`, which must coincide with a node.
pub(crate) fn node_at(result: &SolveResult, x0: ([f64; 2], f64)) -> Result<usize> {
    let g = result.grid();
    let idx = g.locate(&x0.0[..g.dim()], x0.1)?;
    let (m, s) = g.unflat(idx);
    let p = g.position(s);
    let off = (p[0] - x0.0[0]).abs().max(if g.dim() == 2 { (p[1] - x0.0[1]).abs() } else { 0.0 });
    if off > 1e-9 * g.h() || (g.time(m) - x0.1).abs() > 1e-9 * g.dt() {
        return Err(Error::Precondition(format!("point {x0:?} is not a grid node")));
    }
    Ok(idx)
}

/// Spatial gradient at a node, using second-order one-sided differences
/// along nodes that share its mask value so the stencil never straddles
/// `∂Ω`. Falls back to centred differences when neither side qualifies.
pub(crate) fn interface_gradient(result: &SolveResult, idx: usize) -> [f64; 2] {
    let g = result.grid();
    let (m, s) = g.unflat(idx);
    let (u, mask) = (result.field.level(m), result.level_mask(m));
    let mut grad = result.field.gradient_anywhere(m, s);
    let ix = g.split(s);
    let h = g.h();
    for axis in 0..g.dim() {
        let stride = if axis == 0 { 1 } else { g.nx() } as isize;
        let i = ix[axis] as isize;
        let nx = g.nx() as isize;
        let same = |k: isize| {
            let j = i + k;
            j >= 0 && j < nx && mask[(s as isize + k * stride) as usize] == mask[s]
        };
        let at = |k: isize| u[(s as isize + k * stride) as usize];
        let central = same(-1) && same(1);
        if !central {
            for dir in [1isize, -1] {
                if same(dir) && same(2 * dir) {
                    grad[axis] = dir as f64 * (-3.0 * at(0) + 4.0 * at(dir) - at(2 * dir)) / (2.0 * h);
                    break;
                }
            }
        }
    }
    grad
}

fn cylinder_at(result: &SolveResult, idx: usize, r: f64) -> ParabolicCylinder {
    let g = result.grid();
    let (m, s) = g.unflat(idx);
    ParabolicCylinder::new(g.position(s), g.time(m), r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NondegeneracyCheck {
    pub r: f64,
    /// `max_{∂ₚQ_r(X⁰)} u`.
    pub lhs: f64,
    /// `u(X⁰) + r²/(2nλ₁ + 1)`.
    pub rhs: f64,
    pub pass: bool,
}

impl NondegeneracyCheck {
    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Lower growth check at a node of `closure(Ω)`; requires `Ω ⊃ {∇u ≠ 0}`.
/// Passes when `lhs ≥ rhs − 10h²`.
pub fn nondegeneracy(result: &SolveResult, x0: ([f64; 2], f64), r: f64, lambda1: f64) -> Result<NondegeneracyCheck> {
    if result.mode != Mode::B {
        return Err(Error::Precondition("non-degeneracy needs a mode-B result".into()));
    }
    let g = result.grid();
    let idx = node_at(result, x0)?;
    let (m, s) = g.unflat(idx);
    if !in_closure(g, result.level_mask(m), s) {
        return Err(Error::Precondition(format!("point {x0:?} is not in the closure of the active set")));
    }
    let (_, boundary) = cylinder_nodes(g, &cylinder_at(result, idx, r))?;
    let lhs = boundary.iter().map(|i| result.field.values()[i]).fold(f64::NEG_INFINITY, f64::max);
    let n = g.dim() as f64;
    let rhs = result.field.values()[idx] + r * r / (2.0 * n * lambda1 + 1.0);
    let h = g.h();
    Ok(NondegeneracyCheck { r, lhs, rhs, pass: lhs >= rhs - 10.0 * h * h })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    /// `(r, S(r))` with `S(r) = sup_{Q_r}|u − u(X⁰) − ∇u(X⁰)·(x − x⁰)|/r²`.
    pub rows: Vec<(f64, f64)>,
    /// `max_r S(r)`.
    pub c_bar: f64,
    /// `sup |D̃²u|` over `Q_{1/2}(X⁰)` outside the band, if that cylinder fits.
    pub tilde_sup: Option<f64>,
    /// Nodes skipped within the interface band.
    pub excluded: usize,
}

pub fn quadratic_growth(result: &SolveResult, x0: ([f64; 2], f64), radii: &[f64], band: f64) -> Result<GrowthReport> {
    let g = result.grid();
    let u = &result.field;
    let idx = node_at(result, x0)?;
    let s0 = g.unflat(idx).1;
    let grad = interface_gradient(result, idx);
    let (p0, u0) = (g.position(s0), u.values()[idx]);
    let mut rows = Vec::new();
    for &r in radii {
        let (a, b) = cylinder_nodes(g, &cylinder_at(result, idx, r))?;
        let sup = a
            .union(&b)
            .iter()
            .map(|i| {
                let x = g.position(g.unflat(i).1);
                (u.values()[i] - u0 - grad[0] * (x[0] - p0[0]) - grad[1] * (x[1] - p0[1])).abs()
            })
            .fold(0.0, f64::max);
        rows.push((r, sup / (r * r)));
    }
    let c_bar = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let (mut tilde_sup, mut excluded) = (None, 0);
    if let Ok((interior, _)) = cylinder_nodes(g, &cylinder_at(result, idx, 0.5)) {
        let ifaces = extract_all(g, &result.mask);
        let mut sup = 0.0f64;
        for i in interior.iter() {
            let (m, s) = g.unflat(i);
            if ifaces[m].distance(&g.position(s)) < band {
                excluded += 1;
                continue;
            }
            let d = u.differentials(m, s)?;
            sup = sup.max((d.hess.trace_mul(&d.hess) + d.ut * d.ut).sqrt());
        }
        tilde_sup = Some(sup);
    }
    Ok(GrowthReport { rows, c_bar, tilde_sup, excluded })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRow {
    /// Band `[d, 2d)` of distances to `∂Ω`.
    pub d: f64,
    /// `sup |∂ₜu|` over `Ω` nodes in the band.
    pub sup: f64,
    pub nodes: usize,
}

/// `sup |∂ₜu|` over `Ω` in dyadic distance bands `d = 2h, 4h, …`.
pub fn time_decay(result: &SolveResult) -> Result<Vec<DecayRow>> {
    let g = result.grid();
    let ifaces = extract_all(g, &result.mask);
    if ifaces.iter().all(LevelInterface::is_empty) {
        return Err(Error::Precondition("free boundary is empty".into()));
    }
    let h = g.h();
    let mut samples = Vec::new();
    for m in 1..g.nt() {
        if ifaces[m].is_empty() {
            continue;
        }
        let mask = result.level_mask(m);
        for s in (0..g.spatial_len()).filter(|&s| mask[s] && g.is_spatial_interior(s)) {
            let dist = ifaces[m].distance(&g.position(s));
            let ut = result.field.differentials(m, s)?.ut;
            samples.push((dist, ut.abs()));
        }
    }
    let far = samples.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut rows = Vec::new();
    let mut d = 2.0 * h;
    while d <= far {
        let (mut sup, mut nodes) = (0.0f64, 0);
        for &(dist, ut) in &samples {
            if dist >= d && dist < 2.0 * d {
                sup = sup.max(ut);
                nodes += 1;
            }
        }
        rows.push(DecayRow { d, sup, nodes });
        d *= 2.0;
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityReport {
    /// `min (C₀∂ₑu − u)` over the closure of `Q₁(X⁰)`.
    pub m1: f64,
    /// The same minimum over the closure of `Q_{1/2}(X⁰)`.
    pub m2: f64,
    /// `1/(4(2nλ₁ + 1))`.
    pub threshold: f64,
    /// `m1 ≥ −threshold`.
    pub hypothesis: bool,
    /// `m2 ≥ −10h²`.
    pub conclusion: bool,
}

impl MonotonicityReport {
    /// The implication hypothesis ⇒ conclusion.
    pub fn consistent(&self) -> bool {
        !self.hypothesis || self.conclusion
    }
}

pub fn monotonicity_threshold(n: usize, lambda1: f64) -> f64 {
    1.0 / (4.0 * (2.0 * n as f64 * lambda1 + 1.0))
}

/// `e = (e_x, e_t)` is a unit vector in `ℝ^{n+1}` (entries `[e₁, e₂, e_t]`,
/// `e₂` ignored when `n = 1`).
pub fn monotonicity_check(
    result: &SolveResult,
    e: [f64; 3],
    c0: f64,
    x0: ([f64; 2], f64),
    lambda1: f64,
) -> Result<MonotonicityReport> {
    let g = result.grid();
    let n = g.dim();
    let norm = (e[0] * e[0] + if n == 2 { e[1] * e[1] } else { 0.0 } + e[2] * e[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("direction {e:?} is not a unit vector")));
    }
    let u = &result.field;
    let min_over = |r: f64| -> Result<f64> {
        let (interior, boundary) = cylinder_nodes(g, &ParabolicCylinder::new(x0.0, x0.1, r))?;
        let mut low = f64::INFINITY;
        for i in interior.union(&boundary).iter() {
            let (m, s) = g.unflat(i);
            // closed cylinder, minus nodes without a full stencil
            let Ok(d) = u.differentials(m, s) else { continue };
            let de = e[0] * d.grad[0] + if n == 2 { e[1] * d.grad[1] } else { 0.0 } + e[2] * d.ut;
            low = low.min(c0 * de - u.values()[i]);
        }
        Ok(low)
    };
    let (m1, m2) = (min_over(1.0)?, min_over(0.5)?);
    let threshold = monotonicity_threshold(n, lambda1);
    let h = g.h();
    Ok(MonotonicityReport { m1, m2, threshold, hypothesis: m1 >= -threshold, conclusion: m2 >= -10.0 * h * h })
}
