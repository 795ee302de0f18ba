//! The bundled verification suite: exact fixtures run at desk scale, one
//! outcome per acceptance criterion.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    blowup_fit, graph_fit, monotonicity_check, monotonicity_threshold, nondegeneracy, rescale_result, thickness,
    time_decay,
};
use crate::error::Result;
use crate::fixtures::{caloric, halfspace, nonconvex_example, polynomial_p2};
use crate::grid::SpaceTimeGrid;
use crate::interface::boundary_nodes;
use crate::ladder::{decompose, density_decay, ladder, LadderOptions};
use crate::matrix::SymMatrix;
use crate::ops::{self, brute_pucci, Operator};
use crate::solver::{solve_free_boundary, verify_solution, Mode, SolveParams, SolveResult};

/// Evaluator of `(P⁺, P⁻)` for given ellipticity constants.
pub type PucciPair = fn(f64, f64, &SymMatrix) -> (f64, f64);

fn pucci_closed_form(l0: f64, l1: f64, m: &SymMatrix) -> (f64, f64) {
    (ops::pucci_plus(l0, l1, m), ops::pucci_minus(l0, l1, m))
}

fn pucci_sign_fault(l0: f64, l1: f64, m: &SymMatrix) -> (f64, f64) {
    (-ops::pucci_plus(l0, l1, m), ops::pucci_minus(l0, l1, m))
}

/// Deliberate defects used to check that the suite detects them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// `P⁺` returns its negation.
    PucciSign,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SuiteOptions {
    /// Doubles every grid spacing.
    pub coarse: bool,
    pub fault: Option<Fault>,
}

impl SuiteOptions {
    fn pucci(&self) -> PucciPair {
        match self.fault {
            Some(Fault::PucciSign) => pucci_sign_fault,
            None => pucci_closed_form,
        }
    }

    /// Spatial node count on `[−1, 1]` for dimension `n`.
    fn nx(&self, n: usize) -> usize {
        let base = if n == 1 { 257 } else { 129 };
        if self.coarse {
            base / 2 + 1
        } else {
            base
        }
    }

    /// Node count with half the spacing of `nx`.
    fn refined(nx: usize) -> usize {
        2 * nx - 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub measured: String,
    pub required: String,
    /// Further measurements that do not decide the outcome.
    pub notes: Vec<String>,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: measured {}; required {}", self.id, self.title, self.measured, self.required)?;
        for n in &self.notes {
            write!(f, "\n       {n}")?;
        }
        Ok(())
    }
}

pub const CRITERIA: usize = 10;

pub const TITLES: [&str; CRITERIA] = [
    "operator oracle and sandwich",
    "half-space coefficient",
    "stationary half-space preservation",
    "non-convex control",
    "non-degeneracy",
    "polynomial ladder",
    "thickness",
    "directional monotonicity",
    "blow-up classification signature",
    "density decay identity and ABP ratio",
];

/// Runs one criterion, `id` in `1..=10`. Computation errors become failures.
pub fn run_criterion(id: usize, opts: &SuiteOptions) -> Outcome {
    assert!((1..=CRITERIA).contains(&id), "criterion {id} does not exist");
    let title = TITLES[id - 1];
    let run = match id {
        1 => operator_oracle(opts),
        2 => halfspace_coefficient(),
        3 => stationary_halfspace(opts),
        4 => nonconvex_control(opts),
        5 => nondegeneracy_criterion(opts),
        6 => polynomial_ladder(opts),
        7 => thickness_criterion(opts),
        8 => monotonicity_criterion(opts),
        9 => blowup_signature(opts),
        _ => density_identity(opts),
    };
    match run {
        Ok(mut o) => {
            o.id = id;
            o.title = title;
            o
        }
        Err(e) => Outcome {
            id,
            title,
            pass: false,
            measured: format!("error: {e}"),
            required: "a completed run".into(),
            notes: vec![],
        },
    }
}

pub fn run_suite(opts: &SuiteOptions) -> Vec<Outcome> {
    (1..=CRITERIA).map(|id| run_criterion(id, opts)).collect()
}

fn outcome(pass: bool, measured: String, required: impl Into<String>) -> Outcome {
    Outcome { id: 0, title: "", pass, measured, required: required.into(), notes: vec![] }
}

fn line(nx: usize, t_start: f64, t_end: f64, kappa: f64) -> Result<SpaceTimeGrid> {
    SpaceTimeGrid::new(1, nx, 1.0, t_start, t_end, kappa)
}

fn plane(nx: usize, t_start: f64, t_end: f64, nt: usize) -> Result<SpaceTimeGrid> {
    SpaceTimeGrid::from_levels(2, nx, 1.0, t_start, t_end, nt)
}

const ORIGIN: ([f64; 2], f64) = ([0.0, 0.0], 0.0);

fn node_point(g: &SpaceTimeGrid, idx: usize) -> ([f64; 2], f64) {
    let (m, s) = g.unflat(idx);
    (g.position(s), g.time(m))
}

/// Mode-A evolution of the Laplacian half-space on `[−1, 1] × [−1, 0]`
/// with `dt = h²`.
fn solved_halfspace(op: &Operator, nx: usize) -> Result<SolveResult> {
    let g = line(nx, -1.0, 0.0, 1.0)?;
    solve_free_boundary(op, &halfspace(op, g, [1.0, 0.0])?.field, Mode::A, &SolveParams::default())
}

fn sup_drift(r: &SolveResult) -> f64 {
    let g = r.grid();
    let mut dev = 0.0f64;
    for m in 1..g.nt() {
        for (a, b) in r.field.level(m).iter().zip(r.field.level(0)) {
            dev = dev.max((a - b).abs());
        }
    }
    dev
}

fn operator_oracle(opts: &SuiteOptions) -> Result<Outcome> {
    let pucci = opts.pucci();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_gap = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    for i in 0..1000 {
        let n = 1 + i % 2;
        let l0 = rng.gen_range(0.2..1.5);
        let l1 = l0 + rng.gen_range(0.0..2.0);
        let m = random_sym(&mut rng, n);
        let (plus, minus) = pucci(l0, l1, &m);
        let (sup, inf) = brute_pucci(l0, l1, &m, 50);
        worst_gap = worst_gap.max((plus - sup).abs()).max((minus - inf).abs());
    }
    for i in 0..1000 {
        let n = 1 + i % 2;
        let l0 = rng.gen_range(0.2..1.5);
        let l1 = l0 + rng.gen_range(0.1..2.0);
        let op = random_operator(&mut rng, n, l0, l1)?;
        let (p1, p2) = (random_sym(&mut rng, n), random_sym(&mut rng, n));
        let diff = op.eval_f(&p1)? - op.eval_f(&p2)?;
        let (hi, lo) = pucci(l0, l1, &(p1 - p2));
        worst_margin = worst_margin.min((diff - lo).min(hi - diff));
    }
    let oracle = worst_gap <= 1e-10;
    let sandwich = worst_margin >= -1e-12;
    let mut o = outcome(
        oracle && sandwich,
        format!("max |closed form - brute force| = {worst_gap:.3e}, worst sandwich margin = {worst_margin:.3e}"),
        "oracle gap <= 1e-10 and sandwich margin >= -1e-12",
    );
    if !sandwich {
        o.notes.push("sandwich invariant P-(X-Y) <= F(X)-F(Y) <= P+(X-Y) violated".into());
    }
    if !oracle {
        o.notes.push("closed-form Pucci disagrees with the brute-force net".into());
    }
    Ok(o)
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
    let mut entry = || rng.gen_range(-1.0..1.0) * scale;
    if n == 1 {
        SymMatrix::one(entry())
    } else {
        SymMatrix::two(entry(), entry(), entry())
    }
}

/// A Pucci, linear or Bellman operator with constants `(λ₀, λ₁)`.
fn random_operator(rng: &mut ChaCha8Rng, n: usize, l0: f64, l1: f64) -> Result<Operator> {
    let coefficient = |rng: &mut ChaCha8Rng| {
        let nu = [rng.gen_range(l0..=l1), rng.gen_range(l0..=l1)];
        let a = rng.gen_range(0.0..std::f64::consts::PI);
        let q = vec![vec![a.cos(), a.sin()], vec![-a.sin(), a.cos()]];
        if n == 1 {
            SymMatrix::one(nu[0])
        } else {
            SymMatrix::from_eigen(&nu, &q)
        }
    };
    match rng.gen_range(0..4) {
        0 => Operator::pucci_plus(n, l0, l1),
        1 => Operator::pucci_minus(n, l0, l1),
        2 => Operator::linear(coefficient(rng), l0, l1),
        _ => {
            let family = (0..4).map(|_| coefficient(rng)).collect();
            Operator::bellman(family, l0, l1)
        }
    }
}

fn halfspace_coefficient() -> Result<Outcome> {
    let cases = [
        ("Linear Id", Operator::laplacian(1), 1.0),
        ("PucciPlus l1=2", Operator::pucci_plus(1, 1.0, 2.0)?, 0.5),
        ("PucciMinus l0=1/2", Operator::pucci_minus(1, 0.5, 1.0)?, 2.0),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, op, want) in &cases {
        let g = op.halfspace_gamma(&[1.0])?;
        worst = worst.max((g - want).abs());
        parts.push(format!("{name}: {g:.12}"));
    }
    // the bracket [1/λ₁, 1/λ₀] over random operators and directions
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut inside = true;
    for i in 0..200 {
        let n = 1 + i % 2;
        let l0 = rng.gen_range(0.2..1.5);
        let l1 = l0 + rng.gen_range(0.1..2.0);
        let op = random_operator(&mut rng, n, l0, l1)?;
        let a: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
        let e = if n == 1 { vec![1.0] } else { vec![a.cos(), a.sin()] };
        let g = op.halfspace_gamma(&e)?;
        inside &= g >= 1.0 / l1 - 1e-12 && g <= 1.0 / l0 + 1e-12;
    }
    Ok(outcome(
        worst <= 1e-10 && inside,
        format!("{}; max error {worst:.2e}; all 200 random cases in [1/l1, 1/l0]: {inside}", parts.join(", ")),
        "each within 1e-10 and always in [1/l1, 1/l0]",
    ))
}

fn stationary_halfspace(opts: &SuiteOptions) -> Result<Outcome> {
    let op = Operator::laplacian(1);
    let nx = opts.nx(1);
    let (coarse, fine) = (solved_halfspace(&op, nx)?, solved_halfspace(&op, SuiteOptions::refined(nx))?);
    let h = coarse.grid().h();
    let (dc, df) = (sup_drift(&coarse), sup_drift(&fine));
    let ratio = if df > 0.0 { dc / df } else { f64::INFINITY };
    let converged = coarse.converged() && fine.converged();
    Ok(outcome(
        dc <= 10.0 * h * h && ratio >= 3.0 && converged,
        format!(
            "drift {:.3} h^2 at h=1/{}, {:.3} (h/2)^2 at h/2, ratio {ratio:.2}, converged {converged}",
            dc / (h * h),
            (1.0 / h).round(),
            df / (0.25 * h * h)
        ),
        "drift <= 10 h^2 and ratio >= 3",
    ))
}

fn nonconvex_control(opts: &SuiteOptions) -> Result<Outcome> {
    let op = Operator::laplacian(1);
    let g = line(opts.nx(1), -0.5, 0.0, 1.0)?;
    let h = g.h();
    let band = 2.0 * h;
    let params = SolveParams::default();
    let exact = nonconvex_example(g)?;
    let rep = verify_solution(&exact, &op, &params, band)?;
    let solved = solve_free_boundary(&op, &exact.field, Mode::B, &params)?;
    let srep = verify_solution(&solved, &op, &params, band)?;
    let decay = time_decay(&exact)?;
    let flat = decay.iter().all(|r| (r.sup - 2.0).abs() <= 1e-6);
    let omega = rep.omega_residual.unwrap_or(f64::INFINITY);
    let comp = rep.complement_sup.unwrap_or(f64::NAN);
    let pass = rep.pass() && omega <= 10.0 * h * h && (comp - 2.0).abs() <= 1e-6 && srep.pass() && flat;
    let mut o = outcome(
        pass,
        format!(
            "residual in Omega {omega:.2e}, |D~2u| outside {comp:.6}, solved mode-B verify {}, decay bands {:?}",
            srep.pass(),
            decay.iter().map(|r| format!("{:.4}", r.sup)).collect::<Vec<_>>()
        ),
        "residual <= 10 h^2, |D~2u| = 2 outside, and no decay (all bands = 2)",
    );
    o.notes.push(format!("solved mode-B residual in Omega {:.2e}", srep.omega_residual.unwrap_or(f64::NAN)));
    Ok(o)
}

fn nondegeneracy_criterion(opts: &SuiteOptions) -> Result<Outcome> {
    let radii = [1.0 / 16.0, 0.125, 0.25];
    let nx1 = opts.nx(1);
    let g1 = line(nx1, -0.5, 0.0, 4.0)?;
    let lap1 = Operator::laplacian(1);
    let pucci1 = Operator::pucci_plus(1, 1.0, 2.0)?;
    let lap2 = Operator::laplacian(2);
    let as_b = |r: SolveResult| SolveResult::from_exact(r.field, r.mask, Mode::B);
    let example = nonconvex_example(g1)?;
    let solved = solve_free_boundary(&lap1, &example.field, Mode::B, &SolveParams::default())?;
    let fixtures: Vec<(&str, SolveResult, f64)> = vec![
        ("non-convex example", example, 1.0),
        ("solved non-convex example", solved, 1.0),
        ("half-space Linear Id", as_b(halfspace(&lap1, g1, [1.0, 0.0])?)?, 1.0),
        ("half-space PucciPlus", as_b(halfspace(&pucci1, g1, [1.0, 0.0])?)?, pucci1.lambda1()),
        ("half-space 2D Linear Id", as_b(halfspace(&lap2, plane(opts.nx(2), -0.25, 0.0, 5)?, [1.0, 0.0])?)?, 1.0),
    ];
    let mut checked = 0usize;
    let mut failed = 0usize;
    let mut worst = f64::INFINITY;
    for (_, res, l1) in &fixtures {
        let g = res.grid();
        let h = g.h();
        for idx in boundary_nodes(g, &res.mask) {
            let x0 = node_point(g, idx);
            if x0.1 - 0.0625 < g.t_start() - 1e-12 || x0.0[0].abs() + 0.25 > 1.0 || x0.0[1].abs() + 0.25 > 1.0 {
                continue;
            }
            for &r in &radii {
                let c = nondegeneracy(res, x0, r, *l1)?;
                checked += 1;
                failed += usize::from(!c.pass);
                worst = worst.min(c.margin() / (h * h));
            }
        }
    }
    let hs = as_b(halfspace(&lap1, g1, [1.0, 0.0])?)?;
    let mut exact = true;
    for &r in &radii {
        let c = nondegeneracy(&hs, ORIGIN, r, 1.0)?;
        exact &= (c.lhs - r * r / 2.0).abs() <= 1e-14 && (c.rhs - r * r / 3.0).abs() <= 1e-14 && c.pass;
    }
    Ok(outcome(
        failed == 0 && checked > 0 && exact,
        format!(
            "{checked} checks over {} fixtures, {failed} failures, worst margin {worst:.3} h^2; closed form r^2/2 vs r^2/3 exact: {exact}",
            fixtures.len()
        ),
        "every check passes with margin >= -10 h^2",
    ))
}

fn polynomial_ladder(opts: &SuiteOptions) -> Result<Outcome> {
    let op = Operator::laplacian(1);
    let nx = opts.nx(1);
    let q1 = |nx| line(nx, -1.0, 0.0, 4.0);
    let lopts = LadderOptions::default();
    let cal = ladder(&caloric(q1(nx)?, 1.0), &op, &lopts)?;
    let bound = cal.steps.iter().all(|s| s.error <= 1.5 * lopts.rho.powi(2 * s.k as i32));
    let target = crate::polynomial::ParabolicPolynomial { a0: 0.0, b0: [0.0; 2], m0: SymMatrix::one(1.0), c0: 1.0 };
    let dist: Vec<f64> = cal.steps.iter().map(|s| target.tilde_distance(&s.poly.m0, s.poly.c0)).collect();
    let monotone = dist.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let hs = |nx| -> Result<_> { ladder(&halfspace(&op, q1(nx)?, [1.0, 0.0])?.field, &op, &lopts) };
    let (hc, hf) = (hs(nx)?, hs(SuiteOptions::refined(nx))?);
    let stable = hc.fitted_c.max(hf.fitted_c) <= 2.0 * hc.fitted_c.min(hf.fitted_c);
    let residual = [&cal, &hc, &hf].iter().flat_map(|l| l.steps.iter()).map(|s| s.residual.abs()).fold(0.0, f64::max);
    let pass = bound && monotone && hc.fitted_c <= 1.0 && hf.fitted_c <= 1.0 && stable && residual <= 1e-10;
    Ok(outcome(
        pass,
        format!(
            "caloric e_k/rho^2k max {:.3} over k<={}, |D~2P_k - D~2u| {:?}; half-space C {:.4} (h), {:.4} (h/2); max |H(P_k)| {residual:.1e}",
            cal.steps.iter().map(|s| s.scaled_error).fold(0.0, f64::max),
            cal.resolution_limit,
            dist.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>(),
            hc.fitted_c,
            hf.fitted_c
        ),
        "e_k <= 1.5 rho^2k, monotone convergence, C <= 1 stable within 2x, |H(P_k)| <= 1e-10",
    ))
}

fn thickness_criterion(opts: &SuiteOptions) -> Result<Outcome> {
    let lap1 = Operator::laplacian(1);
    let nx = opts.nx(1);
    let g = line(nx, -1.0, 0.5, 4.0)?;
    let h = g.h();
    let hs = halfspace(&lap1, g, [1.0, 0.0])?;
    let mut worst_hs = 0.0f64;
    for r in [0.5, 0.25, 0.125, 0.0625] {
        worst_hs = worst_hs.max((thickness(&hs, ORIGIN, r)?.delta - 1.0).abs() * r / h);
    }
    let g2 = plane(opts.nx(2), -0.3, 0.3, 7)?;
    let hs2 = halfspace(&Operator::laplacian(2), g2, [1.0, 0.0])?;
    for r in [0.5, 0.25] {
        worst_hs = worst_hs.max((thickness(&hs2, ORIGIN, r)?.delta - 1.0).abs() * r / g2.h());
    }
    let p2 = polynomial_p2(&lap1, g, SymMatrix::one(0.8))?;
    let p2_delta = thickness(&p2, ORIGIN, 0.25)?.delta;

    let solved = solved_halfspace(&lap1, nx)?;
    let example = nonconvex_example(g)?;
    let fixtures: Vec<(&SolveResult, ([f64; 2], f64))> = vec![
        (&hs, ORIGIN),
        (&hs, ([0.25, 0.0], 0.1)),
        (&example, ORIGIN),
        (&p2, ORIGIN),
        (&solved, ([0.0, 0.0], -0.5)),
    ];
    let mut worst_scale = 0.0f64;
    for (res, x0) in &fixtures {
        let src = res.grid();
        for r in [0.5, 0.25] {
            let target = SpaceTimeGrid::new(1, (2.0 * r / src.h()).round() as usize + 1, 1.0, -1.0, 1.0, 4.0)?;
            let zoom = rescale_result(res, *x0, r, target)?;
            let gap = (thickness(res, *x0, r)?.delta - thickness(&zoom, ORIGIN, 1.0)?.delta).abs();
            worst_scale = worst_scale.max(gap * r / src.h());
        }
    }
    Ok(outcome(
        worst_hs <= 2.0 && p2_delta == 0.0 && worst_scale <= 4.0,
        format!(
            "half-space |delta_r - 1| <= {worst_hs:.3} h/r; delta(P2) = {p2_delta}; scaling gap <= {worst_scale:.3} h/r over {} fixtures",
            fixtures.len()
        ),
        "|delta_r - 1| <= 2h/r, delta(P2) = 0, scaling gap <= 4h/r",
    ))
}

fn monotonicity_criterion(opts: &SuiteOptions) -> Result<Outcome> {
    let lap1 = Operator::laplacian(1);
    let nx = opts.nx(1);
    let g = line(nx, -1.0, 0.0, 4.0)?;
    let h = g.h();
    let threshold = monotonicity_threshold(1, 1.0);
    let hs = halfspace(&lap1, g, [1.0, 0.0])?;
    let pucci = Operator::pucci_plus(1, 1.0, 2.0)?;
    let hs_pucci = halfspace(&pucci, g, [1.0, 0.0])?;
    let example = nonconvex_example(g)?;
    let p2 = polynomial_p2(&lap1, g, SymMatrix::one(0.8))?;
    let cal = SolveResult::from_exact(caloric(g, 0.5), vec![true; g.len()], Mode::A)?;
    let solved = solved_halfspace(&lap1, nx)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let dirs: [[f64; 3]; 5] = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [s, 0.0, s]];
    let fixtures: Vec<(&SolveResult, f64)> =
        vec![(&hs, 1.0), (&hs_pucci, pucci.lambda1()), (&example, 1.0), (&p2, 1.0), (&cal, 1.0), (&solved, 1.0)];
    let (mut held, mut concluded, mut total) = (0usize, 0usize, 0usize);
    let mut worst = f64::INFINITY;
    for (res, l1) in &fixtures {
        for e in &dirs {
            for c0 in [0.25, 1.0, 4.0] {
                let rep = monotonicity_check(res, *e, c0, ORIGIN, *l1)?;
                total += 1;
                if rep.hypothesis {
                    held += 1;
                    concluded += usize::from(rep.conclusion);
                    worst = worst.min(rep.m2 / (h * h));
                }
            }
        }
    }
    let counter = monotonicity_check(&hs, [1.0, 0.0, 0.0], 0.0, ORIGIN, 1.0)?;
    let counter_ok = !counter.hypothesis && !counter.conclusion && (counter.m2 + 0.125).abs() <= 10.0 * h * h;
    Ok(outcome(
        threshold == 1.0 / 12.0 && held > 0 && concluded == held && counter_ok,
        format!(
            "threshold {threshold:.15}; hypothesis held in {held}/{total} cases, conclusion in {concluded}/{held}, worst m2 {worst:.3} h^2; C0=0 counter-case m2 = {:.6}",
            counter.m2
        ),
        "threshold = 1/12; conclusion whenever hypothesis; counter-case m2 = -1/8 +- 10 h^2 failing both",
    ))
}

struct BlowupSummary {
    points: usize,
    monotone: bool,
    gamma_error: f64,
    m_hat: f64,
    c1: bool,
}

fn blowup_summary(op: &Operator, res: &SolveResult, radii: &[f64]) -> Result<BlowupSummary> {
    let g = res.grid();
    let last = g.nt() - 1;
    let mut s = BlowupSummary { points: 0, monotone: true, gamma_error: 0.0, m_hat: 0.0, c1: true };
    for idx in boundary_nodes(g, &res.mask).into_iter().filter(|&i| g.unflat(i).0 == last) {
        let x0 = node_point(g, idx);
        let fit = blowup_fit(res, op, x0, radii)?;
        s.points += 1;
        // a decreasing function of r: larger scales fit better
        s.monotone &= fit.rows.windows(2).all(|w| w[0].residual <= w[1].residual);
        let fin = fit.finest();
        s.gamma_error = s.gamma_error.max((fin.gamma - fin.gamma_reference).abs() / fin.gamma_reference);
        s.m_hat = s.m_hat.max(fit.rows.iter().map(|r| r.m_hat).fold(0.0, f64::max));
        s.c1 &= graph_fit(res, x0, radii)?.c1_indicator;
    }
    Ok(s)
}

fn blowup_signature(opts: &SuiteOptions) -> Result<Outcome> {
    let nx = opts.nx(1);
    let lap = Operator::laplacian(1);
    let res = solved_halfspace(&lap, nx)?;
    let h = res.grid().h();
    let radii: Vec<f64> = [0.5, 0.25, 0.125, 0.0625, 0.03125].into_iter().filter(|&r| r >= 8.0 * h - 1e-12).collect();
    let s = blowup_summary(&lap, &res, &radii)?;
    let mut o = outcome(
        s.points > 0 && s.monotone && s.gamma_error <= 0.1 && s.m_hat <= 10.0 * h && s.c1,
        format!(
            "Linear Id, {} points, radii down to {}: residual decreasing in r {}, gamma error {:.2}%, m_hat {:.2e} h, C1 indicator {}",
            s.points,
            radii.last().copied().unwrap_or(f64::NAN),
            s.monotone,
            100.0 * s.gamma_error,
            s.m_hat / h,
            s.c1
        ),
        "residual decreasing in r, gamma within 10%, m_hat <= 10 h, C1 indicator",
    );
    for (name, op) in [
        ("PucciMinus l0=1/2", Operator::pucci_minus(1, 0.5, 1.0)?),
        ("PucciPlus l1=2", Operator::pucci_plus(1, 1.0, 2.0)?),
    ] {
        let res = solved_halfspace(&op, nx)?;
        let s = blowup_summary(&op, &res, &radii)?;
        o.notes.push(format!(
            "report {name}: residual decreasing in r {}, gamma error {:.2}%, m_hat {:.2e} h, C1 indicator {}",
            s.monotone,
            100.0 * s.gamma_error,
            s.m_hat / h,
            s.c1
        ));
    }
    Ok(o)
}

fn density_identity(opts: &SuiteOptions) -> Result<Outcome> {
    let lap1 = Operator::laplacian(1);
    let nx = opts.nx(1);
    let g = line(nx, -1.0, 0.0, 4.0)?;
    let solved = solved_halfspace(&lap1, nx)?;
    // dt = 4h² so that the zoomed grids nest in time
    let nx2 = opts.nx(2);
    let masks: Vec<(&str, SolveResult)> = vec![
        ("half-space", halfspace(&lap1, g, [1.0, 0.0])?),
        ("non-convex example", nonconvex_example(g)?),
        ("P2", polynomial_p2(&lap1, g, SymMatrix::one(0.8))?),
        ("solved half-space", solved),
        (
            "2D half-space",
            halfspace(&Operator::laplacian(2), plane(nx2, -0.25, 0.0, (nx2 - 1).pow(2) / 64 + 1)?, [1.0, 0.0])?,
        ),
    ];
    let n_of = |r: &SolveResult| r.grid().dim() as i32;
    let (mut stated_ok, mut corrected_ok) = (true, true);
    let mut worst_stated = 0.0f64;
    let mut worst_corrected = 0.0f64;
    for (_, res) in &masks {
        let n = n_of(res);
        let h = res.grid().h();
        let radii: Vec<f64> = [0.5, 0.25, 0.125].into_iter().filter(|&r| r / h >= 4.0 - 1e-9).collect();
        let table = density_decay(res, None, ORIGIN, &radii)?;
        for row in &table.rows {
            let stated = row.identity_gap(2f64.powi(n + 1)).abs();
            let corrected = row.identity_gap(2f64.powi(n + 2)).abs();
            worst_stated = worst_stated.max(stated / row.cell);
            worst_corrected = worst_corrected.max(corrected / row.cell);
            stated_ok &= stated <= row.cell + 1e-12;
            corrected_ok &= corrected <= row.cell + 1e-12;
        }
    }
    let abp = |nx: usize| -> Result<Option<f64>> {
        let g = line(nx, -1.0, 0.0, 4.0)?;
        let hs = halfspace(&lap1, g, [1.0, 0.0])?;
        let l = ladder(&hs.field, &lap1, &LadderOptions::default())?;
        let p = l.steps[l.snap(0.5)].poly;
        Ok(decompose(&hs, &p, &lap1, ORIGIN, 0.5, &SolveParams::default())?.abp_ratio)
    };
    let (ac, af) = (abp(nx)?, abp(SuiteOptions::refined(nx))?);
    let stable = match (ac, af) {
        (Some(a), Some(b)) => a.is_finite() && (b / a - 1.0).abs() <= 0.2,
        _ => false,
    };
    let mut o = outcome(
        stated_ok && stable,
        format!(
            "|A_(r/2)| - 2^(n+1)|A_r cap Q_1/2| up to {worst_stated:.1} cells over {} masks; ABP ratio {} (h), {} (h/2)",
            masks.len(),
            ac.map_or("none".into(), |v| format!("{v:.4}")),
            af.map_or("none".into(), |v| format!("{v:.4}"))
        ),
        "identity within one cell on all masks and ABP ratio within 20% under h -> h/2",
    );
    o.notes.push(format!(
        "report: with factor 2^(n+2), the parabolic scaling of |Q_1/2|, the gap is at most {worst_corrected:.2} cells (within one cell: {corrected_ok})"
    ));
    Ok(o)
}
