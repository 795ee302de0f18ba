use super::LadderResult;
use crate::error::{Error, Result};
use crate::grid::{cylinder_nodes, measure, NodeSet, ParabolicCylinder, ScalarField, SpaceTimeGrid};
use crate::ops::Operator;
use crate::polynomial::ParabolicPolynomial;
use crate::solver::{solve_dirichlet_shifted, Region, SolveParams, SolveResult, Source};

/// Grid on `[−1, 1]ⁿ × [−1, 0]` whose nodes are the images of source nodes
/// under `(x, t) ↦ ((x − x⁰)/r, (t − t⁰)/r²)`.
fn zoom_grid(src: &SpaceTimeGrid, r: f64) -> Result<SpaceTimeGrid> {
    let cells = 2.0 * r / src.h();
    let levels = r * r / src.dt();
    if (cells - cells.round()).abs() > 1e-6 || cells.round() < 4.0 {
        return Err(Error::Precondition(format!("r={r} is not a multiple of h={} with 2r/h >= 4", src.h())));
    }
    SpaceTimeGrid::from_levels(
        src.dim(),
        cells.round() as usize + 1,
        1.0,
        -1.0,
        0.0,
        levels.round().max(1.0) as usize + 1,
    )
}

/// Source flat index nearest to the image of target node `idx`.
fn zoom_source(
    src: &SpaceTimeGrid,
    target: &SpaceTimeGrid,
    center: ([f64; 2], f64),
    r: f64,
    idx: usize,
) -> Result<usize> {
    let (m, s) = target.unflat(idx);
    let y = target.position(s);
    let x = [center.0[0] + r * y[0], center.0[1] + r * y[1]];
    let t = center.1 + r * r * target.time(m);
    if !src.contains(&x[..src.dim()], t) {
        return Err(Error::CylinderOutsideGrid(format!("Q_{r} around {center:?} leaves the grid")));
    }
    src.locate(&x[..src.dim()], t)
}

/// `A_r = {(y, τ) ∈ Q₁ : (x⁰ + r y, t⁰ + r² τ) ∉ Ω}` as nodes of the zoomed
/// grid, together with that grid and the nodes of `A_r ∩ Q_{1/2}`.
pub fn scaled_complement(
    result: &SolveResult,
    center: ([f64; 2], f64),
    r: f64,
) -> Result<(SpaceTimeGrid, NodeSet, NodeSet)> {
    let src = result.grid();
    let target = zoom_grid(src, r)?;
    let (a, b) = cylinder_nodes(&target, &ParabolicCylinder::at_origin(1.0))?;
    let mut outside = Vec::new();
    for idx in a.union(&b).iter() {
        if !result.mask[zoom_source(src, &target, center, r, idx)?] {
            outside.push(idx);
        }
    }
    let set = NodeSet::from_sorted(outside);
    let (ha, hb) = cylinder_nodes(&target, &ParabolicCylinder::at_origin(0.5))?;
    let half = ha.union(&hb);
    let inner = set.filter(|i| half.contains(i));
    Ok((target, set, inner))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityRow {
    pub r: f64,
    /// `|A_r|`.
    pub measure: f64,
    /// `|A_{r/2}|`.
    pub measure_half: f64,
    /// `|A_r ∩ Q_{1/2}|`.
    pub measure_inner: f64,
    /// `|P̃_r|` of the ladder member at the nearest scale.
    pub tilde_norm: Option<f64>,
    /// `|A_{r/2}|/|A_r|`.
    pub ratio: Option<f64>,
    /// `ratio ≤ 1/2^{n+1}`.
    pub decays: Option<bool>,
    /// Cell volume of the `A_{r/2}` grid.
    pub cell: f64,
}

impl DensityRow {
    /// `|A_{r/2}| − factor·|A_r ∩ Q_{1/2}|`.
    pub fn identity_gap(&self, factor: f64) -> f64 {
        self.measure_half - factor * self.measure_inner
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityTable {
    pub rows: Vec<DensityRow>,
    /// Least `|P̃_r|` above which every row decays, if any row does.
    pub threshold: Option<f64>,
}

pub fn density_decay(
    result: &SolveResult,
    ladder: Option<&LadderResult>,
    center: ([f64; 2], f64),
    radii: &[f64],
) -> Result<DensityTable> {
    let n = result.grid().dim() as i32;
    let mut rows = Vec::new();
    for &r in radii {
        let (g, a, inner) = scaled_complement(result, center, r)?;
        let (gh, ah, _) = scaled_complement(result, center, 0.5 * r)?;
        let measure_r = measure(&g, &a);
        let measure_half = measure(&gh, &ah);
        let ratio = (measure_r > 0.0).then(|| measure_half / measure_r);
        rows.push(DensityRow {
            r,
            measure: measure_r,
            measure_half,
            measure_inner: measure(&g, &inner),
            tilde_norm: ladder.map(|l| l.steps[l.snap(r)].poly.tilde_norm()),
            ratio,
            decays: ratio.map(|q| q <= 0.5f64.powi(n + 1)),
            cell: gh.cell_volume(),
        });
    }
    let threshold = empirical_threshold(&rows);
    Ok(DensityTable { rows, threshold })
}

fn empirical_threshold(rows: &[DensityRow]) -> Option<f64> {
    let mut pts: Vec<(f64, bool)> = rows.iter().filter_map(|r| Some((r.tilde_norm?, r.decays?))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = None;
    for (i, &(norm, _)) in pts.iter().enumerate().rev() {
        if pts[i..].iter().all(|p| p.1) {
            best = Some(norm);
        } else {
            break;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecomposeReport {
    pub v: ScalarField,
    pub w: ScalarField,
    pub sup_w: f64,
    /// `|A_r|^{1/(n+1)}`.
    pub measure_root: f64,
    /// `sup|w_r| / |A_r|^{1/(n+1)}`, if `A_r` is nonempty.
    pub abp_ratio: Option<f64>,
}

/// Splits `u_r = P̄ + v_r + w_r` on `Q₁`, where `P̄ = P(r·, r²·)/r²`,
/// `F(D²v + M0) − c0 − ∂ₜv = 1` with `v = u_r − P̄` on `∂ₚQ₁`, and `w` is the
/// remainder. `p` is expressed in coordinates centred at the point.
pub fn decompose(
    result: &SolveResult,
    p: &ParabolicPolynomial,
    op: &Operator,
    center: ([f64; 2], f64),
    r: f64,
    params: &SolveParams,
) -> Result<DecomposeReport> {
    let src = result.grid();
    let target = zoom_grid(src, r)?;
    let pr = p.rescaled(r);
    let mut data = Vec::with_capacity(target.len());
    for idx in 0..target.len() {
        let (m, s) = target.unflat(idx);
        let u = result.field.values()[zoom_source(src, &target, center, r, idx)?] / (r * r);
        data.push(u - pr.eval(target.position(s), target.time(m)));
    }
    let data = ScalarField::new(target, data)?;
    let q1 = ParabolicCylinder::at_origin(1.0);
    let v = solve_dirichlet_shifted(op, &p.m0, p.c0, Region::Cylinder(q1), &data, Source::Constant(1.0), params)?;
    let w = ScalarField::new(target, data.values().iter().zip(v.values()).map(|(d, v)| d - v).collect())?;
    let (a, b) = cylinder_nodes(&target, &q1)?;
    let sup_w = a.union(&b).iter().map(|i| w.values()[i].abs()).fold(0.0, f64::max);
    let (g, set, _) = scaled_complement(result, center, r)?;
    let measure_root = measure(&g, &set).powf(1.0 / (src.dim() as f64 + 1.0));
    Ok(DecomposeReport { v, w, sup_w, measure_root, abp_ratio: (measure_root > 0.0).then(|| sup_w / measure_root) })
}
