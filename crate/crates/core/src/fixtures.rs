//! Closed-form fields used as boundary data and as exact references.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, SpaceTimeGrid};
use crate::matrix::SymMatrix;
use crate::ops::Operator;
use crate::solver::{Mode, SolveResult};

/// `γ[(x·e)₊]²/2`.
pub fn halfspace_field(grid: SpaceTimeGrid, gamma: f64, e: [f64; 2]) -> ScalarField {
    ScalarField::from_fn(grid, move |x, _| {
        let p = (x[0] * e[0] + x[1] * e[1]).max(0.0);
        0.5 * gamma * p * p
    })
}

/// Exact stationary half-space solution for `op` with `Ω = {x·e > 0}`.
pub fn halfspace(op: &Operator, grid: SpaceTimeGrid, e: [f64; 2]) -> Result<SolveResult> {
    check_dims(op, &grid)?;
    let gamma = op.halfspace_gamma(&e[..grid.dim()])?;
    let field = halfspace_field(grid, gamma, e);
    let mask = node_mask(&grid, |x, _| x[0] * e[0] + x[1] * e[1] > 0.0);
    SolveResult::from_exact(field, mask, Mode::A)
}

/// Unit vector at `degrees` from the `x₁` axis.
pub fn direction(degrees: f64) -> [f64; 2] {
    let a = degrees.to_radians();
    [a.cos(), a.sin()]
}

/// `−2t − x₁²/2` for `x₁ > 0` and `−2t` otherwise, with `Ω = {x₁ > 0}`.
/// Solves the Laplacian problem in `Ω`; outside, `|D̃²u| = 2`.
pub fn nonconvex_example(grid: SpaceTimeGrid) -> Result<SolveResult> {
    let field = ScalarField::from_fn(grid, |x, t| {
        let p = x[0].max(0.0);
        -2.0 * t - 0.5 * p * p
    });
    let mask = node_mask(&grid, |x, _| x[0] > 0.0);
    SolveResult::from_exact(field, mask, Mode::B)
}

/// `scale·(x₁² + 2t)/2`, a solution of `Δw − ∂ₜw = 0`.
pub fn caloric(grid: SpaceTimeGrid, scale: f64) -> ScalarField {
    ScalarField::from_fn(grid, move |x, t| scale * 0.5 * (x[0] * x[0] + 2.0 * t))
}

/// `½⟨Mx, x⟩ + b·t` with `b = F(M) − 1`, so `H(P₂) = 1` everywhere and
/// `Ω` is the whole grid.
pub fn polynomial_p2(op: &Operator, grid: SpaceTimeGrid, m: SymMatrix) -> Result<SolveResult> {
    check_dims(op, &grid)?;
    let b = op.eval_f(&m)? - 1.0;
    let field = ScalarField::from_fn(grid, move |x, t| {
        0.5 * (m.get(0, 0) * x[0] * x[0]
            + if m.dim() == 2 { 2.0 * m.a12() * x[0] * x[1] + m.a22() * x[1] * x[1] } else { 0.0 })
            + b * t
    });
    SolveResult::from_exact(field, vec![true; grid.len()], Mode::A)
}

pub fn zero(grid: SpaceTimeGrid) -> ScalarField {
    ScalarField::zeros(grid)
}

/// Mask from a predicate on node coordinates.
pub fn node_mask(grid: &SpaceTimeGrid, pred: impl Fn([f64; 2], f64) -> bool) -> Vec<bool> {
    (0..grid.len())
        .map(|i| {
            let (m, s) = grid.unflat(i);
            pred(grid.position(s), grid.time(m))
        })
        .collect()
}

fn check_dims(op: &Operator, grid: &SpaceTimeGrid) -> Result<()> {
    if op.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: op.dim() });
    }
    Ok(())
}
