//! TOML run configuration.
//!
//! ```toml
//! [operator]
//! kind = "pucci_plus"        # linear | bellman | pucci_plus | pucci_minus
//! lambda0 = 1.0
//! lambda1 = 2.0
//! # matrix = [1.0]           # linear: row-major n×n
//! # family = [[1.0], [2.0]]  # bellman: row-major matrices
//!
//! [grid]
//! n = 1
//! nx = 129
//! half_width = 1.0
//! t_start = -1.0
//! t_end = 0.0
//! kappa = 1.0
//!
//! [problem]
//! mode = "A"                 # A: Ω ⊃ {u ≠ 0}; B: Ω ⊃ {∇u ≠ 0}
//! fixture = "halfspace"      # or field = "data.field"
//!
//! [analysis]
//! estimators = ["growth", "thickness"]
//! boundary_points = 3
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Unknown keys are rejected, and [`RunConfig::check`] validates every
//! numeric range before any computation.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::fixtures;
use crate::grid::io::load_field;
use crate::grid::{ScalarField, SpaceTimeGrid};
use crate::matrix::SymMatrix;
use crate::ops::Operator;
use crate::solver::{default_theta, membership_mask, Mode, SolveParams, SolveResult};

#[derive(Debug, Error)]
#[error("config: {field}: {message}")]
pub struct ConfigError {
    /// Dotted key path, e.g. `operator.lambda0`.
    pub field: String,
    pub message: String,
}

fn fail<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { field: field.into(), message: message.into() })
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub operator: OperatorConfig,
    pub grid: GridConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base: PathBuf,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OperatorName {
    Linear,
    Bellman,
    PucciPlus,
    PucciMinus,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorName,
    pub lambda0: f64,
    pub lambda1: f64,
    pub matrix: Option<Vec<f64>>,
    pub family: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub nx: usize,
    #[serde(default = "one")]
    pub half_width: f64,
    #[serde(default = "minus_one")]
    pub t_start: f64,
    #[serde(default)]
    pub t_end: f64,
    #[serde(default = "quarter")]
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FixtureName {
    /// `γ[(x·e)₊]²/2` with `F(γ e⊗e) = 1`.
    Halfspace,
    /// `−2t − (x₁)₊²/2`.
    Nonconvex,
    /// `scale·(x₁² + 2t)/2`.
    Caloric,
    /// `½⟨Mx, x⟩ + (F(M) − 1)t`.
    P2,
    Zero,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub mode: Mode,
    pub fixture: Option<FixtureName>,
    /// A `PARAFREE-FIELD` file used as data instead of a fixture.
    pub field: Option<PathBuf>,
    /// Mask file matching `field`; otherwise the mask is the membership set.
    pub mask: Option<PathBuf>,
    /// Half-space normal, in degrees from the `x₁` axis.
    #[serde(default)]
    pub direction_deg: f64,
    /// Caloric fixture amplitude.
    #[serde(default = "one")]
    pub scale: f64,
    /// `P₂` Hessian, row-major.
    pub matrix: Option<Vec<f64>>,
    /// `K`.
    #[serde(default = "ten")]
    pub k_bound: f64,
    pub theta_u: Option<f64>,
    pub theta_g: Option<f64>,
    /// Residual exclusion band in cells.
    #[serde(default = "two")]
    pub band_cells: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub policy_cap: usize,
    pub linear_tol: f64,
    pub outer_cap: usize,
    pub damping: f64,
    pub net_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = SolveParams::default();
        SolverConfig {
            policy_cap: p.policy_cap,
            linear_tol: p.linear_tol,
            outer_cap: p.outer_cap,
            damping: p.damping,
            net_points: p.net_points,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Residual,
    Growth,
    Nondegeneracy,
    Thickness,
    Decay,
    Monotonicity,
    Density,
}

impl Estimator {
    pub const ALL: [Estimator; 7] = [
        Estimator::Residual,
        Estimator::Growth,
        Estimator::Nondegeneracy,
        Estimator::Thickness,
        Estimator::Decay,
        Estimator::Monotonicity,
        Estimator::Density,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Residual => "residual",
            Estimator::Growth => "growth",
            Estimator::Nondegeneracy => "nondegeneracy",
            Estimator::Thickness => "thickness",
            Estimator::Decay => "decay",
            Estimator::Monotonicity => "monotonicity",
            Estimator::Density => "density",
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub estimators: Vec<Estimator>,
    /// Points `[x₁, t]` (n = 1) or `[x₁, x₂, t]` (n = 2), snapped to nodes.
    pub points: Vec<Vec<f64>>,
    /// Additional free boundary nodes sampled evenly on the last level.
    pub boundary_points: usize,
    pub radii: Vec<f64>,
    pub rho: f64,
    pub k_max: usize,
    /// Spacing of the ladder solves.
    pub ladder_h: f64,
    pub p: f64,
    pub c0: f64,
    /// Unit vector in space-time, `[e₁, e_t]` or `[e₁, e₂, e_t]`.
    pub e: Option<Vec<f64>>,
    /// Thickness threshold.
    pub epsilon: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            estimators: Estimator::ALL.to_vec(),
            points: Vec::new(),
            boundary_points: 0,
            radii: vec![0.25, 0.125, 0.0625],
            rho: 0.5,
            k_max: 8,
            ladder_h: 1.0 / 32.0,
            p: 2.0,
            c0: 1.0,
            e: None,
            epsilon: 0.1,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn one() -> f64 {
    1.0
}
fn minus_one() -> f64 {
    -1.0
}
fn quarter() -> f64 {
    0.25
}
fn two() -> f64 {
    2.0
}
fn ten() -> f64 {
    10.0
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        fail(field, format!("must be positive and finite, got {v}"))
    }
}

fn matrix_of(field: &str, n: usize, entries: &[f64]) -> Result<SymMatrix, ConfigError> {
    SymMatrix::from_row_major(n, entries).or_else(|e| fail(field, e.to_string()))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).or_else(|e| fail("toml", e.to_string().trim_end()))
    }

    /// Reads, parses and checks a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).or_else(|e| fail("path", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    /// Range and consistency checks; also requires referenced files to exist.
    pub fn check(&self) -> Result<(), ConfigError> {
        let o = &self.operator;
        positive("operator.lambda0", o.lambda0)?;
        positive("operator.lambda1", o.lambda1)?;
        if o.lambda0 > o.lambda1 {
            return fail("operator.lambda0", format!("lambda0={} exceeds lambda1={}", o.lambda0, o.lambda1));
        }
        let gc = &self.grid;
        if !(gc.n == 1 || gc.n == 2) {
            return fail("grid.n", format!("must be 1 or 2, got {}", gc.n));
        }
        if gc.nx < 5 {
            return fail("grid.nx", format!("must be >= 5, got {}", gc.nx));
        }
        positive("grid.half_width", gc.half_width)?;
        positive("grid.kappa", gc.kappa)?;
        if !(gc.t_start.is_finite() && gc.t_end.is_finite() && gc.t_end > gc.t_start) {
            return fail("grid.t_end", format!("must exceed t_start={}", gc.t_start));
        }
        self.operator()?;

        let p = &self.problem;
        match (p.fixture, &p.field) {
            (Some(_), Some(_)) => return fail("problem.field", "give either fixture or field, not both"),
            (None, None) => return fail("problem.fixture", "one of fixture or field is required"),
            _ => {}
        }
        for (key, path) in [("problem.field", &p.field), ("problem.mask", &p.mask)] {
            if let Some(path) = path {
                if !self.resolve(path).is_file() {
                    return fail(key, format!("file {} does not exist", self.resolve(path).display()));
                }
            }
        }
        if p.mask.is_some() && p.field.is_none() {
            return fail("problem.mask", "a mask needs a field");
        }
        if !p.direction_deg.is_finite() {
            return fail("problem.direction_deg", "must be finite");
        }
        if !p.scale.is_finite() {
            return fail("problem.scale", "must be finite");
        }
        if p.fixture == Some(FixtureName::P2) {
            let m = p.matrix.as_deref().map_or_else(|| fail("problem.matrix", "required by the p2 fixture"), Ok)?;
            matrix_of("problem.matrix", gc.n, m)?;
        }
        positive("problem.k_bound", p.k_bound)?;
        if let Some(v) = p.theta_u {
            positive("problem.theta_u", v)?;
        }
        if let Some(v) = p.theta_g {
            positive("problem.theta_g", v)?;
        }
        if !(p.band_cells >= 0.0 && p.band_cells.is_finite()) {
            return fail("problem.band_cells", format!("must be >= 0, got {}", p.band_cells));
        }
        let s = &p.solver;
        if s.policy_cap < 1 {
            return fail("problem.solver.policy_cap", "must be >= 1");
        }
        if s.outer_cap < 1 {
            return fail("problem.solver.outer_cap", "must be >= 1");
        }
        positive("problem.solver.linear_tol", s.linear_tol)?;
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return fail("problem.solver.damping", format!("must lie in (0, 1], got {}", s.damping));
        }
        if s.net_points < 2 {
            return fail("problem.solver.net_points", "must be >= 2");
        }

        let a = &self.analysis;
        for (i, r) in a.radii.iter().enumerate() {
            positive(&format!("analysis.radii[{i}]"), *r)?;
        }
        if !(a.rho > 0.0 && a.rho < 1.0) {
            return fail("analysis.rho", format!("must lie in (0, 1), got {}", a.rho));
        }
        positive("analysis.ladder_h", a.ladder_h)?;
        if !(a.p >= 1.0 && a.p.is_finite()) {
            return fail("analysis.p", format!("must lie in [1, inf), got {}", a.p));
        }
        if !(a.c0 >= 0.0 && a.c0.is_finite()) {
            return fail("analysis.c0", format!("must be >= 0, got {}", a.c0));
        }
        if !(a.epsilon > 0.0 && a.epsilon <= 1.0) {
            return fail("analysis.epsilon", format!("must lie in (0, 1], got {}", a.epsilon));
        }
        if let Some(e) = &a.e {
            if e.len() != gc.n + 1 {
                return fail("analysis.e", format!("needs {} entries, got {}", gc.n + 1, e.len()));
            }
            let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return fail("analysis.e", format!("must be a unit vector, norm is {norm}"));
            }
        }
        for (i, pt) in a.points.iter().enumerate() {
            if pt.len() != gc.n + 1 {
                return fail(&format!("analysis.points[{i}]"), format!("needs {} entries, got {}", gc.n + 1, pt.len()));
            }
            if pt.iter().any(|v| !v.is_finite()) {
                return fail(&format!("analysis.points[{i}]"), "entries must be finite");
            }
        }
        Ok(())
    }

    pub fn operator(&self) -> Result<Operator, ConfigError> {
        let o = &self.operator;
        let n = self.grid.n;
        let built = match o.kind {
            OperatorName::Linear => {
                let m = o.matrix.as_deref().map_or_else(|| fail("operator.matrix", "required for linear"), Ok)?;
                Operator::linear(matrix_of("operator.matrix", n, m)?, o.lambda0, o.lambda1)
            }
            OperatorName::Bellman => {
                let fam = o.family.as_deref().map_or_else(|| fail("operator.family", "required for bellman"), Ok)?;
                let fam = fam
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix_of(&format!("operator.family[{i}]"), n, m))
                    .collect::<Result<Vec<_>, _>>()?;
                Operator::bellman(fam, o.lambda0, o.lambda1)
            }
            OperatorName::PucciPlus => Operator::pucci_plus(n, o.lambda0, o.lambda1),
            OperatorName::PucciMinus => Operator::pucci_minus(n, o.lambda0, o.lambda1),
        };
        built.or_else(|e| fail("operator", e.to_string()))
    }

    /// Grid from the `[grid]` block.
    pub fn grid(&self) -> Result<SpaceTimeGrid, ConfigError> {
        let g = &self.grid;
        SpaceTimeGrid::new(g.n, g.nx, g.half_width, g.t_start, g.t_end, g.kappa)
            .or_else(|e| fail("grid", e.to_string()))
    }

    pub fn solve_params(&self) -> SolveParams {
        let p = &self.problem;
        let s = &p.solver;
        SolveParams {
            policy_cap: s.policy_cap,
            linear_tol: s.linear_tol,
            outer_cap: s.outer_cap,
            theta_u: p.theta_u,
            theta_g: p.theta_g,
            k_bound: p.k_bound,
            damping: s.damping,
            net_points: s.net_points,
        }
    }

    /// Data field: the fixture on the configured grid, or the field file.
    pub fn data(&self) -> Result<ScalarField, ConfigError> {
        Ok(self.exact()?.field)
    }

    /// The configured fixture as an exact result, or the field file with its
    /// mask (read from `problem.mask`, else the membership set).
    pub fn exact(&self) -> Result<SolveResult, ConfigError> {
        let p = &self.problem;
        if let Some(path) = &p.field {
            let field = load_field(&self.resolve(path)).or_else(|e| fail("problem.field", e.to_string()))?;
            return self.with_mask(field, p.mask.as_deref().map(|m| self.resolve(m)).as_deref());
        }
        let op = self.operator()?;
        let g = self.grid()?;
        let e = fixtures::direction(p.direction_deg);
        let err = |e: crate::Error| ConfigError { field: "problem.fixture".into(), message: e.to_string() };
        let mode = p.mode;
        let mut res = match p.fixture.expect("checked") {
            FixtureName::Halfspace => fixtures::halfspace(&op, g, e).map_err(err)?,
            FixtureName::Nonconvex => fixtures::nonconvex_example(g).map_err(err)?,
            FixtureName::Caloric => self.with_mask(fixtures::caloric(g, p.scale), None)?,
            FixtureName::P2 => {
                let m = matrix_of("problem.matrix", g.dim(), p.matrix.as_deref().expect("checked"))?;
                fixtures::polynomial_p2(&op, g, m).map_err(err)?
            }
            FixtureName::Zero => self.with_mask(fixtures::zero(g), None)?,
        };
        res.mode = mode;
        Ok(res)
    }

    /// Pairs a field with a mask file, or with its membership set.
    pub fn with_mask(&self, field: ScalarField, mask: Option<&Path>) -> Result<SolveResult, ConfigError> {
        let mode = self.problem.mode;
        let mask = match mask {
            Some(path) => {
                let m = load_field(path).or_else(|e| fail("problem.mask", e.to_string()))?;
                if m.grid() != field.grid() {
                    return fail("problem.mask", "grid differs from the field's");
                }
                m.values().iter().map(|&v| v > 0.5).collect()
            }
            None => {
                let theta = match mode {
                    Mode::A => self.problem.theta_u,
                    Mode::B => self.problem.theta_g,
                }
                .unwrap_or_else(|| default_theta(&field, mode));
                membership_mask(&field, mode, theta)
            }
        };
        SolveResult::from_exact(field, mask, mode).or_else(|e| fail("problem.mask", e.to_string()))
    }

    /// Configured points as `(x, t)` pairs, checked against `grid`.
    pub fn points(&self, grid: &SpaceTimeGrid) -> Result<Vec<([f64; 2], f64)>, ConfigError> {
        let n = grid.dim();
        let mut out = Vec::new();
        for (i, pt) in self.analysis.points.iter().enumerate() {
            let x = if n == 1 { [pt[0], 0.0] } else { [pt[0], pt[1]] };
            let t = pt[n];
            if !grid.contains(&x[..n], t) {
                return fail(&format!("analysis.points[{i}]"), format!("({x:?}, t={t}) lies outside the grid"));
            }
            out.push((x, t));
        }
        Ok(out)
    }

    /// Space-time direction as `[e₁, e₂, e_t]`; defaults to `e₁`.
    pub fn direction(&self) -> [f64; 3] {
        match self.analysis.e.as_deref() {
            Some([a, t]) => [*a, 0.0, *t],
            Some([a, b, t]) => [*a, *b, *t],
            _ => [1.0, 0.0, 0.0],
        }
    }
}
