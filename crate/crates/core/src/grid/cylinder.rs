use super::{ScalarField, SpaceTimeGrid, GEOM_EPS};
use crate::error::{Error, Result};

/// Backward parabolic cylinder `B_r(x⁰) × (t⁰ − r², t⁰]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicCylinder {
    pub center: [f64; 2],
    pub t0: f64,
    pub radius: f64,
}

impl ParabolicCylinder {
    pub fn new(center: [f64; 2], t0: f64, radius: f64) -> Self {
        ParabolicCylinder { center, t0, radius }
    }

    pub fn at_origin(radius: f64) -> Self {
        Self::new([0.0, 0.0], 0.0, radius)
    }

    pub fn spatial_distance(&self, grid: &SpaceTimeGrid, x: &[f64; 2]) -> f64 {
        let dx = x[0] - self.center[0];
        if grid.dim() == 1 {
            dx.abs()
        } else {
            dx.hypot(x[1] - self.center[1])
        }
    }
}

/// A sorted set of flat node indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeSet {
    nodes: Vec<usize>,
}

impl NodeSet {
    pub fn from_sorted(nodes: Vec<usize>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        NodeSet { nodes }
    }

    pub fn from_unsorted(mut nodes: Vec<usize>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        NodeSet { nodes }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().copied()
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn contains(&self, idx: usize) -> bool {
        self.nodes.binary_search(&idx).is_ok()
    }
    pub fn as_slice(&self) -> &[usize] {
        &self.nodes
    }

    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> NodeSet {
        NodeSet { nodes: self.nodes.iter().copied().filter(|&i| keep(i)).collect() }
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut v = self.nodes.clone();
        v.extend_from_slice(&other.nodes);
        NodeSet::from_unsorted(v)
    }
}

/// Partitions the grid nodes of a cylinder into interior and parabolic
/// boundary nodes. Boundary nodes are those with `|x − x⁰| ∈ (r − h, r]` or on
/// the first time level; the top cap belongs to the interior.
pub fn cylinder_nodes(grid: &SpaceTimeGrid, cyl: &ParabolicCylinder) -> Result<(NodeSet, NodeSet)> {
    let h = grid.h();
    let r = cyl.radius;
    if r < h {
        return Err(Error::DegenerateCylinder { radius: r, h });
    }
    let sx = GEOM_EPS * h;
    let st = GEOM_EPS * grid.dt();
    let n = grid.dim();
    for axis in 0..n {
        if cyl.center[axis].abs() + r > grid.half_width() + sx {
            return Err(Error::CylinderOutsideGrid(format!(
                "spatial extent {} ± {r} leaves [-{}, {}] on axis {axis}",
                cyl.center[axis],
                grid.half_width(),
                grid.half_width()
            )));
        }
    }
    let bottom = cyl.t0 - r * r;
    if bottom < grid.t_start() - st || cyl.t0 > grid.t_end() + st {
        return Err(Error::CylinderOutsideGrid(format!(
            "time window [{bottom}, {}] leaves [{}, {}]",
            cyl.t0,
            grid.t_start(),
            grid.t_end()
        )));
    }

    let levels: Vec<usize> =
        (0..grid.nt()).filter(|&m| grid.time(m) >= bottom - st && grid.time(m) <= cyl.t0 + st).collect();
    let spatial: Vec<(usize, bool)> = (0..grid.spatial_len())
        .filter_map(|s| {
            let d = cyl.spatial_distance(grid, &grid.position(s));
            (d <= r + sx).then_some((s, d > r - h + sx))
        })
        .collect();

    let (mut interior, mut boundary) = (Vec::new(), Vec::new());
    for &m in &levels {
        let bottom_cap = grid.time(m) < bottom + grid.dt() - st;
        for &(s, lateral) in &spatial {
            let idx = grid.flat(m, s);
            if bottom_cap || lateral {
                boundary.push(idx);
            } else {
                interior.push(idx);
            }
        }
    }
    Ok((NodeSet::from_sorted(interior), NodeSet::from_sorted(boundary)))
}

pub fn sup_norm(f: &ScalarField, region: &NodeSet) -> f64 {
    region.iter().map(|i| f.values()[i].abs()).fold(0.0, f64::max)
}

/// Cell-counting measure: `hⁿ·dt` times the number of space-time cells whose
/// corners all belong to `region`.
pub fn measure(grid: &SpaceTimeGrid, region: &NodeSet) -> f64 {
    let nx = grid.nx();
    let sl = grid.spatial_len();
    let mut cells = 0usize;
    for idx in region.iter() {
        let (m, s) = grid.unflat(idx);
        let ix = grid.split(s);
        if m + 1 >= grid.nt() || ix[0] + 1 >= nx || (grid.dim() == 2 && ix[1] + 1 >= nx) {
            continue;
        }
        let mut offsets = vec![1usize];
        if grid.dim() == 2 {
            offsets.extend([nx, nx + 1]);
        }
        let corners_in = |base: usize| offsets.iter().all(|&o| region.contains(base + o));
        if corners_in(idx) && region.contains(idx + sl) && corners_in(idx + sl) {
            cells += 1;
        }
    }
    cells as f64 * grid.cell_volume()
}
