use rayon::prelude::*;

use super::estimates::{interface_gradient, node_at};
use crate::error::{Error, Result};
use crate::grid::{cylinder_nodes, ParabolicCylinder};
use crate::interface::LevelInterface;
use crate::ops::Operator;
use crate::solver::SolveResult;

/// Directions of the 2D fitting nets.
pub const DIRECTION_NET: usize = 720;

fn directions(n: usize) -> Vec<[f64; 2]> {
    if n == 1 {
        return vec![[1.0, 0.0], [-1.0, 0.0]];
    }
    (0..DIRECTION_NET)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / DIRECTION_NET as f64;
            [a.cos(), a.sin()]
        })
        .collect()
}

/// Whether a node touches the interface of its level.
pub fn on_free_boundary(result: &SolveResult, x0: ([f64; 2], f64)) -> Result<bool> {
    let g = result.grid();
    let (m, s) = g.unflat(node_at(result, x0)?);
    let iface = LevelInterface::extract(g, result.level_mask(m));
    Ok(iface.distance(&g.position(s)) <= g.h() * (1.0 + 1e-9))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupRow {
    pub r: f64,
    pub e: [f64; 2],
    pub gamma: f64,
    /// RMS misfit relative to the RMS of the rescaled samples.
    pub residual: f64,
    pub gamma_reference: f64,
    /// `sup |∂ₜu|` over `Q_{r/2}(X⁰)`.
    pub m_hat: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupFit {
    pub x0: ([f64; 2], f64),
    pub rows: Vec<BlowupRow>,
}

impl BlowupFit {
    /// Fit at the smallest radius.
    pub fn finest(&self) -> &BlowupRow {
        self.rows.last().expect("at least one radius")
    }
}

/// Fits `γ[(y·e)₊]²/2` to `[u(x⁰ + r y, t⁰ + r² τ) − u(X⁰) − r∇u(X⁰)·y]/r²`
/// on `Q_{1/2}` for each radius, sampling the source nodes directly.
pub fn blowup_fit(result: &SolveResult, op: &Operator, x0: ([f64; 2], f64), radii: &[f64]) -> Result<BlowupFit> {
    let g = result.grid();
    let h = g.h();
    if radii.is_empty() {
        return Err(Error::Precondition("no radii given".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("radii must decrease".into()));
    }
    if let Some(&r) = radii.iter().find(|&&r| r < 8.0 * h * (1.0 - 1e-9)) {
        return Err(Error::Precondition(format!("radius {r} is below the resolution 8h = {}", 8.0 * h)));
    }
    if !on_free_boundary(result, x0)? {
        return Err(Error::Precondition(format!("point {x0:?} is not on the free boundary")));
    }
    let idx = node_at(result, x0)?;
    let p0 = g.position(g.unflat(idx).1);
    let u = &result.field;
    let (u0, grad) = (u.values()[idx], interface_gradient(result, idx));
    let nets = directions(g.dim());
    let mut rows = Vec::new();
    for &r in radii {
        let (a, b) = cylinder_nodes(g, &ParabolicCylinder::new(p0, x0.1, 0.5 * r))?;
        let nodes = a.union(&b);
        let samples: Vec<([f64; 2], f64)> = nodes
            .iter()
            .map(|i| {
                let x = g.position(g.unflat(i).1);
                let d = [x[0] - p0[0], x[1] - p0[1]];
                let w = (u.values()[i] - u0 - grad[0] * d[0] - grad[1] * d[1]) / (r * r);
                ([d[0] / r, d[1] / r], w)
            })
            .collect();
        let norm2: f64 = samples.iter().map(|s| s.1 * s.1).sum();
        let (e, gamma, misfit) = nets
            .par_iter()
            .map(|&e| {
                let (mut wp, mut pp) = (0.0, 0.0);
                for (y, w) in &samples {
                    let phi = 0.5 * (y[0] * e[0] + y[1] * e[1]).max(0.0).powi(2);
                    wp += w * phi;
                    pp += phi * phi;
                }
                let gamma = if pp > 0.0 { (wp / pp).max(0.0) } else { 0.0 };
                let misfit: f64 = samples
                    .iter()
                    .map(|(y, w)| w - gamma * 0.5 * (y[0] * e[0] + y[1] * e[1]).max(0.0).powi(2))
                    .map(|d| d * d)
                    .sum();
                (e, gamma, misfit)
            })
            .reduce(|| ([1.0, 0.0], 0.0, f64::INFINITY), |x, y| if y.2 < x.2 { y } else { x });
        let residual = if norm2 > 0.0 { (misfit / norm2).sqrt() } else { 0.0 };
        let mut m_hat = 0.0f64;
        for i in nodes.iter() {
            let (m, s) = g.unflat(i);
            if m > 0 {
                m_hat = m_hat.max(((u.values()[i] - u.at(m - 1, s)) / (g.time(m) - g.time(m - 1))).abs());
            }
        }
        let gamma_reference = op.halfspace_gamma(&e[..g.dim()])?;
        rows.push(BlowupRow { r, e, gamma, residual, gamma_reference, m_hat });
    }
    Ok(BlowupFit { x0, rows })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphRow {
    pub r: f64,
    /// Fitted unit normal of the free boundary (spatial in 2D, space-time
    /// `(x, t)` after parabolic scaling in 1D).
    pub e: [f64; 2],
    /// Lipschitz slope `s(r)`.
    pub slope: f64,
    pub points: usize,
    /// Fewer than four interface points.
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphFit {
    pub rows: Vec<GraphRow>,
    /// `s(r_{i+1}) ≤ s(r_i) + 2h/r_{i+1}` along decreasing radii.
    pub c1_indicator: bool,
    /// Largest radius from which the slope sequence is monotone within slack.
    pub monotone_from: Option<f64>,
}

/// Minimal slope `s` with `|Y·e| ≤ s|Y·e⊥| + 2h/r` over the rescaled
/// interface points `Y`, minimised over the direction net. In two space
/// dimensions `Y = (x − x⁰)/r` over the slices of `Q_r(X⁰)`; in one,
/// `Y = ((x − x⁰)/r, (t − t⁰)/r²)`.
pub fn graph_fit(result: &SolveResult, x0: ([f64; 2], f64), radii: &[f64]) -> Result<GraphFit> {
    let g = result.grid();
    let h = g.h();
    let idx = node_at(result, x0)?;
    let p0 = g.position(g.unflat(idx).1);
    let nets = directions(2);
    let mut rows = Vec::new();
    for &r in radii {
        let st = 1e-9 * g.dt();
        let mut pts = Vec::new();
        for m in (0..g.nt()).filter(|&m| g.time(m) >= x0.1 - r * r - st && g.time(m) <= x0.1 + st) {
            let tau = (g.time(m) - x0.1) / (r * r);
            for p in LevelInterface::extract(g, result.level_mask(m)).points {
                let d = [(p[0] - p0[0]) / r, (p[1] - p0[1]) / r];
                if g.dim() == 1 {
                    if d[0].abs() <= 1.0 {
                        pts.push([d[0], tau]);
                    }
                } else if d[0].hypot(d[1]) <= 1.0 {
                    pts.push(d);
                }
            }
        }
        if pts.len() < 4 {
            rows.push(GraphRow { r, e: [1.0, 0.0], slope: f64::NAN, points: pts.len(), skipped: true });
            continue;
        }
        let slack = 2.0 * h / r;
        let (e, slope, _) = nets
            .par_iter()
            .map(|&e| {
                let mut s = 0.0f64;
                let mut width = 0.0f64;
                for y in &pts {
                    let normal = (y[0] * e[0] + y[1] * e[1]).abs();
                    let tangent = (-y[0] * e[1] + y[1] * e[0]).abs();
                    width = width.max(normal);
                    let excess = (normal - slack).max(0.0);
                    if excess > 0.0 {
                        s = s.max(if tangent > 0.0 { excess / tangent } else { f64::INFINITY });
                    }
                }
                (e, s, width)
            })
            .reduce(|| ([1.0, 0.0], f64::INFINITY, f64::INFINITY), |a, b| if (b.1, b.2) < (a.1, a.2) { b } else { a });
        let e = orient(result, x0, r, e);
        rows.push(GraphRow { r, e, slope, points: pts.len(), skipped: false });
    }
    let fitted: Vec<&GraphRow> = rows.iter().filter(|r| !r.skipped).collect();
    let ok = |a: &GraphRow, b: &GraphRow| b.slope <= a.slope + 2.0 * h / b.r;
    let c1_indicator = fitted.windows(2).all(|w| ok(w[0], w[1]));
    let mut monotone_from = fitted.last().map(|r| r.r);
    for i in (0..fitted.len().saturating_sub(1)).rev() {
        if ok(fitted[i], fitted[i + 1]) {
            monotone_from = Some(fitted[i].r);
        } else {
            break;
        }
    }
    Ok(GraphFit { rows, c1_indicator, monotone_from })
}

/// Flips `e` so that it points into `Ω` on the slice of `X⁰`.
fn orient(result: &SolveResult, x0: ([f64; 2], f64), r: f64, e: [f64; 2]) -> [f64; 2] {
    let g = result.grid();
    let Ok(idx) = node_at(result, x0) else { return e };
    let (m, s0) = g.unflat(idx);
    let p0 = g.position(s0);
    let mask = result.level_mask(m);
    let mut score = 0.0;
    for s in 0..g.spatial_len() {
        let x = g.position(s);
        let d = [x[0] - p0[0], x[1] - p0[1]];
        if d[0].hypot(d[1]) <= r {
            // in 1D only the spatial component of the normal is meaningful here
            let side = d[0] * e[0] + if g.dim() == 2 { d[1] * e[1] } else { 0.0 };
            score += if mask[s] { side } else { -side };
        }
    }
    if score < 0.0 {
        [-e[0], -e[1]]
    } else {
        e
    }
}
