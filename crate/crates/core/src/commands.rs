//! Implementations of the `parafree` subcommands. Each returns the lines to
//! print, or a [`Failure`] carrying the exit code.

use std::path::{Path, PathBuf};

use crate::analysis::{
    blowup_fit, graph_fit, monotonicity_check, nondegeneracy, quadratic_growth, thickness_report, time_decay,
};
use crate::config::{ConfigError, Estimator, RunConfig};
use crate::grid::io::{load_field, save_field, write_csv};
use crate::grid::{ScalarField, SpaceTimeGrid};
use crate::interface::boundary_nodes;
use crate::ladder::{density_decay, ladder, lp_bmo, pointwise_bmo, LadderOptions};
use crate::report::{cell, interface_table, num, Status, Summary, Table};
use crate::solver::{solve_free_boundary, verify_solution, SolveResult};
use crate::suite::{run_criterion, run_suite, SuiteOptions, CRITERIA};

#[derive(Debug)]
pub enum Failure {
    /// Invalid config or unreadable input; exit 1.
    Config(String),
    /// Solver did not converge or its result failed the residual check; exit 2.
    NotConverged(String),
    /// A verification criterion failed; exit 3.
    Verify(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::NotConverged(_) => 2,
            Failure::Verify(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::NotConverged(m) | Failure::Verify(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Config(format!("error: {e}"))
    }
}

/// Output of a successful command: lines for stdout.
pub type Lines = Vec<String>;

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("output.dir: {}: {e}", dir.display())))?;
    Ok(dir)
}

fn mask_field(grid: SpaceTimeGrid, mask: &[bool]) -> Result<ScalarField, Failure> {
    Ok(ScalarField::new(grid, mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())?)
}

fn write_text(
    path: &Path,
    f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> crate::Result<()>,
) -> Result<(), Failure> {
    let file = std::fs::File::create(path).map_err(crate::Error::from)?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w)?;
    Ok(())
}

/// `solve`: writes `u.field`, `mask.field`, `next_mask.field`, `u.csv`,
/// `interface.csv` and the residual report `solve.txt`. The report lines
/// accompany a non-convergence failure.
pub fn solve(cfg: &RunConfig) -> Result<Lines, (Lines, Failure)> {
    solve_inner(cfg).map_err(|f| (Lines::new(), f))?
}

fn solve_inner(cfg: &RunConfig) -> Result<Result<Lines, (Lines, Failure)>, Failure> {
    let op = cfg.operator()?;
    let data = cfg.data()?;
    let params = cfg.solve_params();
    let g = *data.grid();
    let dir = out_dir(cfg)?;
    let result = solve_free_boundary(&op, &data, cfg.problem.mode, &params)?;
    save_field(&dir.join("u.field"), &result.field)?;
    save_field(&dir.join("mask.field"), &mask_field(g, &result.mask)?)?;
    save_field(&dir.join("next_mask.field"), &mask_field(g, &result.next_mask)?)?;
    write_text(&dir.join("u.csv"), |w| write_csv(w, &result.field))?;
    interface_table(&result).write(&dir.join("interface.csv"))?;

    let band = cfg.problem.band_cells * g.h();
    let rep = verify_solution(&result, &op, &params, band)?;
    let unconverged = result.levels.iter().filter(|l| !l.converged).count();
    let mut s = Summary::new();
    s.push("command", "solve").grid(&g);
    s.push("mode", format!("{:?}", result.mode))
        .push("theta", result.theta)
        .push("tolerance", rep.tolerance)
        .push("band", rep.band)
        .push("k_bound", rep.k_bound)
        .push("converged", result.converged())
        .push("unconverged_levels", unconverged)
        .push("cycle_levels", result.levels.iter().filter(|l| l.cycle_resolved).count())
        .push("pinned_nodes", result.levels.iter().map(|l| l.pinned).sum::<usize>())
        .push("outer_iterations", result.levels.iter().map(|l| l.outer_iterations).sum::<usize>())
        .push("policy_iterations", result.levels.iter().map(|l| l.policy_iterations).sum::<usize>())
        .push("discrete_residual", result.max_residual())
        .push("omega_nodes", rep.omega_nodes)
        .push_opt("omega_residual", rep.omega_residual)
        .push("omega_pass", rep.omega_pass)
        .push("complement_nodes", rep.complement_nodes)
        .push_opt("complement_sup", rep.complement_sup)
        .push("complement_pass", rep.complement_pass)
        .statement("equation_in_omega", Status::from_pass(rep.omega_pass))
        .statement("bound_outside_omega", Status::from_pass(rep.complement_pass));
    s.write(&dir.join("solve.txt"))?;
    let lines: Lines = s.to_string().lines().map(str::to_string).collect();
    if !result.converged() {
        let msg =
            format!("solve: {unconverged} levels did not converge; mask.field and next_mask.field hold both masks");
        return Ok(Err((lines, Failure::NotConverged(msg))));
    }
    if !rep.pass() {
        let msg = "solve: converged but the residual check failed; see solve.txt".to_string();
        return Ok(Err((lines, Failure::NotConverged(msg))));
    }
    Ok(Ok(lines))
}

/// Loads the analysed result: `field` (and `mask`) override the config.
pub fn load_result(cfg: &RunConfig, field: Option<&Path>, mask: Option<&Path>) -> Result<SolveResult, Failure> {
    match field {
        Some(path) => {
            let f = load_field(path).map_err(|e| Failure::Config(format!("field {}: {e}", path.display())))?;
            if let Some(m) = mask {
                if !m.is_file() {
                    return Err(Failure::Config(format!("mask {} does not exist", m.display())));
                }
            }
            Ok(cfg.with_mask(f, mask)?)
        }
        None if mask.is_some() => Err(Failure::Config("--mask needs --field".into())),
        None => Ok(cfg.exact()?),
    }
}

/// Configured points plus sampled free boundary nodes, snapped to nodes.
fn sample_points(cfg: &RunConfig, result: &SolveResult) -> Result<Vec<([f64; 2], f64)>, Failure> {
    let g = result.grid();
    let mut pts = Vec::new();
    for (x, t) in cfg.points(g)? {
        let (m, s) = g.unflat(g.locate(&x[..g.dim()], t)?);
        pts.push((g.position(s), g.time(m)));
    }
    let want = cfg.analysis.boundary_points;
    if want > 0 {
        let level = g.nt() - 1;
        let sl = g.spatial_len();
        let r_max = cfg.analysis.radii.iter().copied().fold(0.0, f64::max);
        let margin = |s: usize| {
            let x = g.position(s);
            let d = g.half_width() - x[0].abs();
            if g.dim() == 2 {
                d.min(g.half_width() - x[1].abs())
            } else {
                d
            }
        };
        let all: Vec<usize> = boundary_nodes(g, &result.mask)
            .into_iter()
            .filter(|&i| g.unflat(i).0 == level)
            .map(|i| i - level * sl)
            .collect();
        let inside: Vec<usize> = all.iter().copied().filter(|&s| margin(s) >= r_max).collect();
        let pool = if inside.is_empty() { all } else { inside };
        let k = want.min(pool.len());
        for j in 0..k {
            let s = pool[(2 * j + 1) * pool.len() / (2 * k)];
            pts.push((g.position(s), g.time(level)));
        }
    }
    Ok(pts)
}

fn point_cells(i: usize, x: &([f64; 2], f64)) -> Vec<String> {
    vec![i.to_string(), num(x.0[0]), num(x.0[1]), num(x.1)]
}

fn header<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut h = vec!["point", "x1", "x2", "t"];
    h.extend_from_slice(extra);
    h
}

fn overall(statuses: &[Status]) -> Status {
    if statuses.is_empty() || statuses.iter().all(|s| *s == Status::Skipped) {
        Status::Skipped
    } else if statuses.contains(&Status::Fail) {
        Status::Fail
    } else if statuses.contains(&Status::Pass) {
        Status::Pass
    } else {
        Status::Report
    }
}

/// `analyze`: one CSV per selected estimator and `analyze.txt`.
pub fn analyze(cfg: &RunConfig, field: Option<&Path>, mask: Option<&Path>) -> Result<Lines, Failure> {
    let op = cfg.operator()?;
    let result = load_result(cfg, field, mask)?;
    let pts = sample_points(cfg, &result)?;
    let dir = out_dir(cfg)?;
    let g = *result.grid();
    let h = g.h();
    let a = &cfg.analysis;
    let band = cfg.problem.band_cells * h;
    let mut s = Summary::new();
    s.push("command", "analyze").grid(&g);
    s.push("mode", format!("{:?}", result.mode)).push("points", pts.len()).push("band", band);
    let mut estimators = a.estimators.clone();
    estimators.sort();
    estimators.dedup();
    for est in estimators {
        let path = dir.join(format!("{}.csv", est.name()));
        let status = match est {
            Estimator::Residual => {
                let rep = verify_solution(&result, &op, &cfg.solve_params(), band)?;
                let mut t = Table::new(&[
                    "band",
                    "tolerance",
                    "k_bound",
                    "omega_nodes",
                    "omega_residual",
                    "complement_nodes",
                    "complement_sup",
                    "omega_pass",
                    "complement_pass",
                ]);
                t.push(vec![
                    num(rep.band),
                    num(rep.tolerance),
                    num(rep.k_bound),
                    rep.omega_nodes.to_string(),
                    cell(rep.omega_residual),
                    rep.complement_nodes.to_string(),
                    cell(rep.complement_sup),
                    rep.omega_pass.to_string(),
                    rep.complement_pass.to_string(),
                ]);
                t.write(&path)?;
                s.push("residual.tolerance", rep.tolerance);
                s.statement("equation_residual", Status::from_pass(rep.pass()));
                continue;
            }
            Estimator::Growth => {
                let mut t = Table::new(&header(&["r", "s_r", "c_bar", "tilde_sup", "excluded", "flag"]));
                let mut st = Vec::new();
                for (i, x) in pts.iter().enumerate() {
                    match quadratic_growth(&result, *x, &a.radii, band) {
                        Ok(rep) => {
                            st.push(Status::Report);
                            for (r, v) in &rep.rows {
                                let mut row = point_cells(i, x);
                                row.extend([
                                    num(*r),
                                    num(*v),
                                    num(rep.c_bar),
                                    cell(rep.tilde_sup),
                                    rep.excluded.to_string(),
                                    String::new(),
                                ]);
                                t.push(row);
                            }
                        }
                        Err(e) => {
                            st.push(Status::Skipped);
                            t.push(flag_row(i, x, 5, &e));
                        }
                    }
                }
                t.write(&path)?;
                ("optimal_regularity", overall(&st))
            }
            Estimator::Nondegeneracy => {
                s.push("nondegeneracy.slack", 10.0 * h * h);
                let mut t = Table::new(&header(&["r", "lhs", "rhs", "margin", "pass", "flag"]));
                let mut st = Vec::new();
                for (i, x) in pts.iter().enumerate() {
                    for &r in &a.radii {
                        match nondegeneracy(&result, *x, r, op.lambda1()) {
                            Ok(c) => {
                                st.push(Status::from_pass(c.pass));
                                let mut row = point_cells(i, x);
                                row.extend([
                                    num(r),
                                    num(c.lhs),
                                    num(c.rhs),
                                    num(c.margin()),
                                    c.pass.to_string(),
                                    String::new(),
                                ]);
                                t.push(row);
                            }
                            Err(e) => {
                                st.push(Status::Skipped);
                                let mut row = flag_row(i, x, 5, &e);
                                row[4] = num(r);
                                t.push(row);
                            }
                        }
                    }
                }
                t.write(&path)?;
                ("nondegeneracy", overall(&st))
            }
            Estimator::Thickness => {
                s.push("thickness.epsilon", a.epsilon);
                let mut t = Table::new(&header(&["r", "delta", "slice", "epsilon", "thick", "flag"]));
                let mut st = Vec::new();
                for (i, x) in pts.iter().enumerate() {
                    match thickness_report(&result, *x, &a.radii, a.epsilon) {
                        Ok(rep) => {
                            st.push(Status::Report);
                            for row_t in &rep.rows {
                                let mut row = point_cells(i, x);
                                row.extend([
                                    num(row_t.r),
                                    num(row_t.delta),
                                    num(row_t.slice),
                                    num(a.epsilon),
                                    (row_t.delta >= a.epsilon).to_string(),
                                    String::new(),
                                ]);
                                t.push(row);
                            }
                        }
                        Err(e) => {
                            st.push(Status::Skipped);
                            t.push(flag_row(i, x, 5, &e));
                        }
                    }
                }
                t.write(&path)?;
                ("thickness", overall(&st))
            }
            Estimator::Decay => {
                let mut t = Table::new(&["d", "sup_ut", "nodes", "flag"]);
                let status = match time_decay(&result) {
                    Ok(rows) => {
                        for r in &rows {
                            t.push(vec![num(r.d), num(r.sup), r.nodes.to_string(), String::new()]);
                        }
                        Status::Report
                    }
                    Err(e) => {
                        t.push(vec![String::new(), String::new(), String::new(), e.to_string()]);
                        Status::Skipped
                    }
                };
                t.write(&path)?;
                ("time_decay", status)
            }
            Estimator::Monotonicity => {
                let e = cfg.direction();
                let threshold = crate::analysis::monotonicity_threshold(g.dim(), op.lambda1());
                s.push("monotonicity.c0", a.c0)
                    .push("monotonicity.threshold", threshold)
                    .push("monotonicity.slack", 10.0 * h * h);
                let mut t = Table::new(&header(&[
                    "e1",
                    "e2",
                    "et",
                    "c0",
                    "m1",
                    "m2",
                    "threshold",
                    "hypothesis",
                    "conclusion",
                    "consistent",
                    "flag",
                ]));
                let mut st = Vec::new();
                for (i, x) in pts.iter().enumerate() {
                    let mut row = point_cells(i, x);
                    row.extend([num(e[0]), num(e[1]), num(e[2]), num(a.c0)]);
                    match monotonicity_check(&result, e, a.c0, *x, op.lambda1()) {
                        Ok(rep) => {
                            st.push(Status::from_pass(rep.consistent()));
                            row.extend([
                                num(rep.m1),
                                num(rep.m2),
                                num(rep.threshold),
                                rep.hypothesis.to_string(),
                                rep.conclusion.to_string(),
                                rep.consistent().to_string(),
                                String::new(),
                            ]);
                        }
                        Err(err) => {
                            st.push(Status::Skipped);
                            row.extend((0..6).map(|_| String::new()));
                            row.push(err.to_string());
                        }
                    }
                    t.push(row);
                }
                t.write(&path)?;
                ("directional_monotonicity", overall(&st))
            }
            Estimator::Density => {
                let mut t = Table::new(&header(&[
                    "r",
                    "measure",
                    "measure_half",
                    "measure_inner",
                    "ratio",
                    "decays",
                    "identity_gap",
                    "corrected_gap",
                    "cell",
                    "flag",
                ]));
                let factor = 2f64.powi(g.dim() as i32 + 1);
                s.push("density.factor", factor);
                let mut st = Vec::new();
                for (i, x) in pts.iter().enumerate() {
                    for &r in &a.radii {
                        let mut row = point_cells(i, x);
                        row.push(num(r));
                        match density_decay(&result, None, *x, &[r]) {
                            Ok(tab) => {
                                st.push(Status::Report);
                                let d = &tab.rows[0];
                                row.extend([
                                    num(d.measure),
                                    num(d.measure_half),
                                    num(d.measure_inner),
                                    cell(d.ratio),
                                    cell(d.decays),
                                    num(d.identity_gap(factor)),
                                    num(d.identity_gap(2.0 * factor)),
                                    num(d.cell),
                                    String::new(),
                                ]);
                            }
                            Err(e) => {
                                st.push(Status::Skipped);
                                row.extend((0..8).map(|_| String::new()));
                                row.push(e.to_string());
                            }
                        }
                        t.push(row);
                    }
                }
                t.write(&path)?;
                ("density_decay", overall(&st))
            }
        };
        s.statement(status.0, status.1);
    }
    s.write(&dir.join("analyze.txt"))?;
    Ok(s.to_string().lines().map(str::to_string).collect())
}

/// Point cells, `blanks` empty cells and the error as the final flag.
fn flag_row(i: usize, x: &([f64; 2], f64), blanks: usize, e: &crate::Error) -> Vec<String> {
    let mut row = point_cells(i, x);
    row.extend((0..blanks).map(|_| String::new()));
    row.push(e.to_string());
    row
}

/// `ladder`: `ladder.csv`, `bmo.csv`, `lp_bmo.csv` and `ladder.txt`, for the
/// ladder at the origin of the field.
pub fn run_ladder(cfg: &RunConfig, field: Option<&Path>, mask: Option<&Path>) -> Result<Lines, Failure> {
    let op = cfg.operator()?;
    let result = load_result(cfg, field, mask)?;
    let dir = out_dir(cfg)?;
    let g = *result.grid();
    let a = &cfg.analysis;
    let opts = LadderOptions {
        rho: a.rho,
        k_max: a.k_max,
        target_h: a.ladder_h,
        params: cfg.solve_params(),
        ..LadderOptions::default()
    };
    let mut s = Summary::new();
    s.push("command", "ladder").grid(&g);
    s.push("rho", a.rho).push("k_max", a.k_max).push("ladder_h", a.ladder_h).push("p", a.p);
    let mut t = Table::new(&["k", "radius", "error", "scaled_error", "tilde_norm", "residual", "contraction", "flag"]);
    match ladder(&result.field, &op, &opts) {
        Ok(lad) => {
            for (i, st) in lad.steps.iter().enumerate() {
                let contraction = if i == 0 { None } else { lad.contraction.get(i - 1).copied() };
                t.push(vec![
                    st.k.to_string(),
                    num(st.radius),
                    num(st.error),
                    num(st.scaled_error),
                    num(st.poly.tilde_norm()),
                    num(st.residual),
                    cell(contraction),
                    String::new(),
                ]);
            }
            let mut b = Table::new(&["r", "k", "snapped", "sup", "ratio"]);
            for row in pointwise_bmo(&lad, &a.radii) {
                b.push(vec![num(row.r), row.k.to_string(), num(row.snapped), num(row.sup), num(row.ratio)]);
            }
            b.write(&dir.join("bmo.csv"))?;
            let mut l = Table::new(&["k", "radius", "mean", "nodes", "excluded"]);
            let band = cfg.problem.band_cells * g.h();
            for row in lp_bmo(&result.field, &lad, a.p, Some((&result.mask, band)))? {
                l.push(vec![
                    row.k.to_string(),
                    num(row.radius),
                    num(row.mean),
                    row.nodes.to_string(),
                    row.excluded.to_string(),
                ]);
            }
            l.write(&dir.join("lp_bmo.csv"))?;
            let residual = lad.steps.iter().map(|s| s.residual.abs()).fold(0.0, f64::max);
            s.push("fitted_c", lad.fitted_c)
                .push("steps", lad.steps.len())
                .push("resolution_limit", lad.resolution_limit)
                .push("contracts", lad.contracts())
                .push("max_polynomial_residual", residual)
                .push_opt("truncated", lad.truncated.as_deref());
            s.statement("polynomial_ladder", Status::from_pass(lad.contracts() && residual <= 1e-10));
            s.statement("pointwise_bmo", Status::Report);
            s.statement("lp_bmo", Status::Report);
        }
        Err(e) => {
            t.push(vec![String::new(); 7].into_iter().chain([e.to_string()]).collect());
            s.push("flag", e.to_string());
            s.statement("polynomial_ladder", Status::Skipped);
        }
    }
    t.write(&dir.join("ladder.csv"))?;
    s.write(&dir.join("ladder.txt"))?;
    Ok(s.to_string().lines().map(str::to_string).collect())
}

/// `blowup`: `blowup.csv`, `graph.csv`, `interface.csv` and `blowup.txt`.
pub fn run_blowup(cfg: &RunConfig, field: Option<&Path>, mask: Option<&Path>) -> Result<Lines, Failure> {
    let op = cfg.operator()?;
    let result = load_result(cfg, field, mask)?;
    let pts = sample_points(cfg, &result)?;
    let dir = out_dir(cfg)?;
    let g = *result.grid();
    let radii = &cfg.analysis.radii;
    let mut s = Summary::new();
    s.push("command", "blowup").grid(&g);
    s.push("points", pts.len()).push("gamma_tolerance", 0.1).push("m_hat_bound", 10.0 * g.h());
    let mut b =
        Table::new(&header(&["r", "e1", "e2", "gamma", "gamma_reference", "gamma_error", "residual", "m_hat", "flag"]));
    let mut gr =
        Table::new(&header(&["r", "e1", "e2", "slope", "interface_points", "skipped", "c1_indicator", "flag"]));
    let (mut st_b, mut st_g) = (Vec::new(), Vec::new());
    for (i, x) in pts.iter().enumerate() {
        match blowup_fit(&result, &op, *x, radii) {
            Ok(fit) => {
                st_b.push(Status::Report);
                for r in &fit.rows {
                    let mut row = point_cells(i, x);
                    row.extend([
                        num(r.r),
                        num(r.e[0]),
                        num(r.e[1]),
                        num(r.gamma),
                        num(r.gamma_reference),
                        num((r.gamma - r.gamma_reference).abs() / r.gamma_reference),
                        num(r.residual),
                        num(r.m_hat),
                        String::new(),
                    ]);
                    b.push(row);
                }
            }
            Err(e) => {
                st_b.push(Status::Skipped);
                b.push(flag_row(i, x, 8, &e));
            }
        }
        match graph_fit(&result, *x, radii) {
            Ok(fit) => {
                let fitted = fit.rows.iter().any(|r| !r.skipped);
                st_g.push(if fitted { Status::Report } else { Status::Skipped });
                let c1 = if fitted { fit.c1_indicator.to_string() } else { String::new() };
                for r in &fit.rows {
                    let mut row = point_cells(i, x);
                    if r.skipped {
                        row.extend([
                            num(r.r),
                            String::new(),
                            String::new(),
                            String::new(),
                            r.points.to_string(),
                            "true".to_string(),
                            c1.clone(),
                            "precondition violated: fewer than 4 interface points in the cylinder".to_string(),
                        ]);
                    } else {
                        row.extend([
                            num(r.r),
                            num(r.e[0]),
                            num(r.e[1]),
                            num(r.slope),
                            r.points.to_string(),
                            "false".to_string(),
                            c1.clone(),
                            String::new(),
                        ]);
                    }
                    gr.push(row);
                }
                s.push_opt(format!("graph.{i}.monotone_from"), fit.monotone_from);
            }
            Err(e) => {
                st_g.push(Status::Skipped);
                gr.push(flag_row(i, x, 7, &e));
            }
        }
    }
    b.write(&dir.join("blowup.csv"))?;
    gr.write(&dir.join("graph.csv"))?;
    interface_table(&result).write(&dir.join("interface.csv"))?;
    s.statement("blowup_classification", overall(&st_b));
    s.statement("c1_graph", overall(&st_g));
    s.write(&dir.join("blowup.txt"))?;
    Ok(s.to_string().lines().map(str::to_string).collect())
}

/// `verify`: one line per acceptance criterion; fails if any criterion does.
/// `only` restricts the run to the listed criteria.
pub fn verify(opts: &SuiteOptions, only: &[usize]) -> Result<Lines, (Lines, Failure)> {
    if let Some(&bad) = only.iter().find(|&&id| !(1..=CRITERIA).contains(&id)) {
        return Err((Lines::new(), Failure::Config(format!("criterion {bad} does not exist (1..={CRITERIA})"))));
    }
    let outcomes =
        if only.is_empty() { run_suite(opts) } else { only.iter().map(|&id| run_criterion(id, opts)).collect() };
    let lines: Lines = outcomes.iter().map(|o| o.to_string().trim_end().to_string()).collect();
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| format!("{} ({})", o.id, o.title)).collect();
    if failed.is_empty() {
        Ok(lines)
    } else {
        Err((lines, Failure::Verify(format!("verify: criteria failed: {}", failed.join(", ")))))
    }
}

/// `operators validate`: hypothesis checks on random samples.
pub fn validate_operator(cfg: &RunConfig, samples: usize, seed: u64) -> Result<Lines, Failure> {
    if samples < 1 {
        return Err(Failure::Config("samples must be >= 1".into()));
    }
    let op = cfg.operator()?;
    let rep = op.validate(samples, seed);
    let mut s = Summary::new();
    s.push("command", "operators validate")
        .push("kind", format!("{:?}", cfg.operator.kind))
        .push("n", op.dim())
        .push("lambda0", op.lambda0())
        .push("lambda1", op.lambda1())
        .push("samples", rep.samples)
        .push("seed", seed)
        .push("tolerance", crate::ops::ALGEBRAIC_TOL)
        .push("h0.pass", rep.h0.pass)
        .push("h0.worst_margin", rep.h0.worst_margin)
        .push("h1.pass", rep.h1.pass)
        .push("h1.worst_margin", rep.h1.worst_margin)
        .push("convex.pass", rep.convex.pass)
        .push("convex.worst_margin", rep.convex.worst_margin)
        .push("concave.pass", rep.concave.pass)
        .push("concave.worst_margin", rep.concave.worst_margin);
    match op.halfspace_gamma(&[1.0, 0.0][..op.dim()]) {
        Ok(gamma) => s.push("halfspace_gamma_e1", gamma),
        Err(e) => s.push("halfspace_gamma_e1", format!("error: {e}")),
    };
    s.statement("h0", Status::from_pass(rep.h0.pass))
        .statement("h1", Status::from_pass(rep.h1.pass))
        .statement("h2", Status::from_pass(rep.h2_pass()));
    let lines: Lines = s.to_string().lines().map(str::to_string).collect();
    if rep.all_pass() {
        Ok(lines)
    } else {
        Err(Failure::Verify(format!("{}\noperators validate: hypothesis check failed", lines.join("\n"))))
    }
}
