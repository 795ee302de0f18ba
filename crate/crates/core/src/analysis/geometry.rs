use crate::error::{Error, Result};
use crate::grid::{ScalarField, SpaceTimeGrid};
use crate::solver::SolveResult;

/// Smallest distance between two parallel hyperplanes containing `points`.
/// Zero for fewer than two points.
pub fn minimal_diameter(points: &[[f64; 2]], n: usize) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    if n == 1 {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[0]), b.max(p[0])));
        return hi - lo;
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return 0.0;
    }
    // rotating calipers: for each hull edge the farthest vertex advances monotonically
    let m = hull.len();
    let dist = |i: usize, j: usize| {
        let (a, b, p) = (hull[i], hull[(i + 1) % m], hull[j]);
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        ((p[0] - a[0]) * ey - (p[1] - a[1]) * ex).abs() / ex.hypot(ey)
    };
    let mut best = f64::INFINITY;
    let mut j = 1;
    for i in 0..m {
        while dist(i, (j + 1) % m) > dist(i, j) {
            j = (j + 1) % m;
        }
        best = best.min(dist(i, j));
    }
    best
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThicknessRow {
    pub r: f64,
    /// `inf_t MD(Λ ∩ B_r(x⁰) × {t})/r`.
    pub delta: f64,
    /// Time of the minimising slice.
    pub slice: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThicknessReport {
    pub x0: ([f64; 2], f64),
    pub rows: Vec<ThicknessRow>,
    pub epsilon: f64,
}

impl ThicknessReport {
    /// Whether `δ_r ≥ ε` at every listed scale.
    pub fn thick(&self) -> bool {
        self.rows.iter().all(|r| r.delta >= self.epsilon)
    }
}

/// Thickness of `Λ = {mask = false}` over the two-sided window `[t⁰ − r², t⁰ + r²]`.
pub fn thickness(result: &SolveResult, x0: ([f64; 2], f64), r: f64) -> Result<ThicknessRow> {
    let g = result.grid();
    let (c, t0) = x0;
    let st = 1e-9 * g.dt();
    if t0 - r * r < g.t_start() - st {
        return Err(Error::CylinderOutsideGrid(format!(
            "window start {} precedes t_start {}",
            t0 - r * r,
            g.t_start()
        )));
    }
    if t0 + r * r > g.t_end() + st {
        return Err(Error::CylinderOutsideGrid(format!("window end {} exceeds t_end {}", t0 + r * r, g.t_end())));
    }
    let sx = 1e-9 * g.h();
    for axis in 0..g.dim() {
        if c[axis].abs() + r > g.half_width() + sx {
            return Err(Error::CylinderOutsideGrid(format!("ball of radius {r} leaves the grid on axis {axis}")));
        }
    }
    let mut best = ThicknessRow { r, delta: f64::INFINITY, slice: t0 };
    for m in 0..g.nt() {
        let t = g.time(m);
        if t < t0 - r * r - st || t > t0 + r * r + st {
            continue;
        }
        let level = result.level_mask(m);
        let pts: Vec<[f64; 2]> = (0..g.spatial_len())
            .filter(|&s| !level[s])
            .map(|s| g.position(s))
            .filter(|x| (x[0] - c[0]).hypot(if g.dim() == 2 { x[1] - c[1] } else { 0.0 }) <= r + sx)
            .collect();
        let delta = minimal_diameter(&pts, g.dim()) / r;
        if delta < best.delta {
            best = ThicknessRow { r, delta, slice: t };
        }
    }
    Ok(best)
}

pub fn thickness_report(
    result: &SolveResult,
    x0: ([f64; 2], f64),
    radii: &[f64],
    epsilon: f64,
) -> Result<ThicknessReport> {
    let rows = radii.iter().map(|&r| thickness(result, x0, r)).collect::<Result<Vec<_>>>()?;
    Ok(ThicknessReport { x0, rows, epsilon })
}

/// Parabolic zoom of a result: `u_r(y, τ) = u(x⁰ + r y, t⁰ + r² τ)/r²` on
/// `target`; the mask is taken from the nearest source node.
pub fn rescale_result(result: &SolveResult, x0: ([f64; 2], f64), r: f64, target: SpaceTimeGrid) -> Result<SolveResult> {
    let src = result.grid();
    let field: ScalarField = crate::grid::rescale_field(&result.field, x0, r, target)?;
    let mut mask = Vec::with_capacity(target.len());
    for idx in 0..target.len() {
        let (m, s) = target.unflat(idx);
        let y = target.position(s);
        let x = [x0.0[0] + r * y[0], x0.0[1] + r * y[1]];
        mask.push(result.mask[src.locate(&x[..src.dim()], x0.1 + r * r * target.time(m))?]);
    }
    SolveResult::from_exact(field, mask, result.mode)
}
