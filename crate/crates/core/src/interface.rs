//! Free-boundary points of a nodal mask.
//!
//! `∂Ω` is represented by the midpoints of spatially adjacent node pairs on
//! the same time level whose mask values differ. Distances to `∂Ω` are
//! measured within a time slice.

use crate::grid::SpaceTimeGrid;

/// Interface midpoints of one time level.
#[derive(Clone, Debug, Default)]
pub struct LevelInterface {
    pub points: Vec<[f64; 2]>,
}

impl LevelInterface {
    pub fn extract(grid: &SpaceTimeGrid, mask: &[bool]) -> Self {
        let nx = grid.nx();
        let mut points = Vec::new();
        for s in 0..grid.spatial_len() {
            let ix = grid.split(s);
            let here = grid.position(s);
            let mut push = |other: usize| {
                if mask[s] != mask[other] {
                    let there = grid.position(other);
                    points.push([0.5 * (here[0] + there[0]), 0.5 * (here[1] + there[1])]);
                }
            };
            if ix[0] + 1 < nx {
                push(s + 1);
            }
            if grid.dim() == 2 && ix[1] + 1 < nx {
                push(s + nx);
            }
        }
        LevelInterface { points }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Euclidean distance to the nearest interface point (∞ if none).
    pub fn distance(&self, x: &[f64; 2]) -> f64 {
        self.points.iter().map(|p| (p[0] - x[0]).hypot(p[1] - x[1])).fold(f64::INFINITY, f64::min)
    }
}

/// Per-level interfaces of a full space-time mask.
pub fn extract_all(grid: &SpaceTimeGrid, mask: &[bool]) -> Vec<LevelInterface> {
    let sl = grid.spatial_len();
    (0..grid.nt()).map(|m| LevelInterface::extract(grid, &mask[m * sl..(m + 1) * sl])).collect()
}

/// Nodes on the closure of `Ω` adjacent to its complement: mask-false nodes
/// with a spatial neighbour inside `Ω`. Returned as flat indices.
pub fn boundary_nodes(grid: &SpaceTimeGrid, mask: &[bool]) -> Vec<usize> {
    let sl = grid.spatial_len();
    let nx = grid.nx();
    let mut out = Vec::new();
    for m in 0..grid.nt() {
        let level = &mask[m * sl..(m + 1) * sl];
        for s in 0..sl {
            if level[s] {
                continue;
            }
            let ix = grid.split(s);
            let mut adjacent = false;
            if ix[0] > 0 {
                adjacent |= level[s - 1];
            }
            if ix[0] + 1 < nx {
                adjacent |= level[s + 1];
            }
            if grid.dim() == 2 {
                if ix[1] > 0 {
                    adjacent |= level[s - nx];
                }
                if ix[1] + 1 < nx {
                    adjacent |= level[s + nx];
                }
            }
            if adjacent {
                out.push(m * sl + s);
            }
        }
    }
    out
}

/// Whether node `s` of a level mask lies in the closure of `Ω`.
pub fn in_closure(grid: &SpaceTimeGrid, level_mask: &[bool], s: usize) -> bool {
    if level_mask[s] {
        return true;
    }
    let ix = grid.split(s);
    let nx = grid.nx();
    (ix[0] > 0 && level_mask[s - 1])
        || (ix[0] + 1 < nx && level_mask[s + 1])
        || (grid.dim() == 2 && ix[1] > 0 && level_mask[s - nx])
        || (grid.dim() == 2 && ix[1] + 1 < nx && level_mask[s + nx])
}
