use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use parafree::grid::io::{load_field, save_field};
use parafree::report::{Summary, Table};

const HALFSPACE: &str = r#"
[operator]
kind = "linear"
matrix = [1.0]
lambda0 = 1.0
lambda1 = 1.0

[grid]
n = 1
nx = 65
t_start = -0.5
t_end = 0.0
kappa = 1.0

[problem]
mode = "A"
fixture = "halfspace"

[analysis]
estimators = ["residual", "growth", "nondegeneracy", "decay", "density"]
points = [[0.0, -0.25]]
boundary_points = 1
radii = [0.25, 0.125]

[output]
dir = "out"
"#;

const CALORIC: &str = r#"
[operator]
kind = "linear"
matrix = [1.0]
lambda0 = 1.0
lambda1 = 1.0

[grid]
n = 1
nx = 129
kappa = 1.0

[problem]
mode = "A"
fixture = "caloric"
scale = 0.5

[analysis]
radii = [0.5, 0.25]
k_max = 4

[output]
dir = "out"
"#;

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("run.toml"), config).unwrap();
        Run { dir }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }

    fn exec(&self, args: &[&str]) -> Output {
        parafree(args, self.dir.path())
    }

    fn summary(&self, name: &str) -> Summary {
        Summary::parse(&std::fs::read_to_string(self.out(name)).unwrap()).unwrap()
    }
}

fn parafree(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parafree"))
        .args(args)
        .current_dir(cwd)
        .env("PARAFREE_THREADS", "2")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_halfspace_passes_the_residual_report() {
    let run = Run::new(HALFSPACE);
    let o = run.exec(&["solve", "run.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = run.summary("solve.txt");
    assert_eq!(s.get("converged"), Some("true"));
    assert_eq!(s.get("statement.equation_in_omega"), Some("pass"));
    assert_eq!(s.get("statement.bound_outside_omega"), Some("pass"));
    assert_eq!(s.get("grid.nx"), Some("65"));
    assert!(s.get("tolerance").is_some());
    for f in ["u.field", "mask.field", "next_mask.field", "u.csv", "interface.csv"] {
        assert!(run.out(f).exists(), "{f} missing");
    }
    assert_eq!(stdout(&o), s.to_string());
}

#[test]
fn inverted_ellipticity_names_the_field() {
    let run = Run::new(&HALFSPACE.replacen("lambda0 = 1.0", "lambda0 = 2.0", 1));
    let o = run.exec(&["solve", "run.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("operator.lambda0"), "{}", stderr(&o));
    assert!(!run.out("u.field").exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let run = Run::new(&HALFSPACE.replacen("[grid]\n", "[grid]\nspacing = 0.1\n", 1));
    let o = run.exec(&["solve", "run.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("spacing"), "{}", stderr(&o));
}

#[test]
fn one_outer_iteration_reports_non_convergence_with_both_masks() {
    let cfg = HALFSPACE.replacen(
        "fixture = \"halfspace\"",
        "fixture = \"halfspace\"\ndirection_deg = 0.0\nscale = 1.0\n\n[problem.solver]\nouter_cap = 1",
        1,
    );
    let cfg = cfg.replacen("t_start = -0.5", "t_start = -0.5\nkappa = 4.0", 1).replacen("kappa = 1.0", "", 1);
    let cfg = cfg
        .replacen("[operator]\nkind = \"linear\"\nmatrix = [1.0]", "[operator]\nkind = \"linear\"\nmatrix = [2.0]", 1)
        .replacen("lambda1 = 1.0", "lambda1 = 2.0", 1);
    let run = Run::new(&cfg);
    let o = run.exec(&["solve", "run.toml"]);
    assert_eq!(code(&o), 2, "{}{}", stdout(&o), stderr(&o));
    let s = run.summary("solve.txt");
    assert_eq!(s.get("converged"), Some("false"));
    assert!(run.out("mask.field").exists());
    assert!(run.out("next_mask.field").exists());
    let mask = load_field(&run.out("mask.field")).unwrap();
    let next = load_field(&run.out("next_mask.field")).unwrap();
    assert_ne!(mask.values(), next.values());
}

#[test]
fn ladder_on_the_caloric_fixture_is_bounded() {
    let run = Run::new(CALORIC);
    let o = run.exec(&["ladder", "run.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = Table::read(&run.out("ladder.csv")).unwrap();
    let scaled: Vec<f64> = t.column("scaled_error").unwrap().iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(scaled.len(), 5);
    assert!(scaled.iter().all(|&v| v.is_finite() && v <= 1.0), "{scaled:?}");
    assert_eq!(run.summary("ladder.txt").get("statement.polynomial_ladder"), Some("pass"));
}

#[test]
fn analyze_rejects_a_point_outside_the_grid() {
    let run = Run::new(&HALFSPACE.replacen("points = [[0.0, -0.25]]", "points = [[1.5, -0.25]]", 1));
    let o = run.exec(&["analyze", "run.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("analysis.points[0]"), "{}", stderr(&o));
}

#[test]
fn analyze_writes_one_table_per_estimator() {
    let run = Run::new(HALFSPACE);
    let o = run.exec(&["analyze", "run.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for est in ["residual", "growth", "nondegeneracy", "decay", "density"] {
        assert!(run.out(&format!("{est}.csv")).exists(), "{est}.csv missing");
    }
    let t = Table::read(&run.out("nondegeneracy.csv")).unwrap();
    assert_eq!(t.header[..4], ["point", "x1", "x2", "t"]);
    let s = run.summary("analyze.txt");
    assert_eq!(s.get("statement.equation_residual"), Some("pass"));
    // non-degeneracy is a mode-B statement
    assert_eq!(s.get("statement.nondegeneracy"), Some("skipped"));
}

#[test]
fn blowup_on_a_polynomial_flags_each_point() {
    let cfg = HALFSPACE
        .replacen("fixture = \"halfspace\"", "fixture = \"p2\"\nmatrix = [1.0]", 1)
        .replacen("boundary_points = 1", "boundary_points = 0", 1)
        .replacen("points = [[0.0, -0.25]]", "points = [[0.0, -0.25], [0.25, -0.125]]", 1)
        .replacen("radii = [0.25, 0.125]", "radii = [0.5, 0.25]", 1);
    let run = Run::new(&cfg);
    let o = run.exec(&["blowup", "run.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["blowup.csv", "graph.csv"] {
        let t = Table::read(&run.out(name)).unwrap();
        let flags = t.column("flag").unwrap();
        let mut points = t.column("point").unwrap();
        points.dedup();
        assert_eq!(points, ["0", "1"], "{name}");
        assert!(flags.iter().all(|f| f.starts_with("precondition violated")), "{name}: {flags:?}");
    }
    let b = Table::read(&run.out("blowup.csv")).unwrap();
    assert!(b.column("flag").unwrap().iter().all(|f| f.contains("not on the free boundary")));
    let s = run.summary("blowup.txt");
    assert_eq!(s.get("statement.blowup_classification"), Some("skipped"));
    assert_eq!(s.get("statement.c1_graph"), Some("skipped"));
}

#[test]
fn missing_field_file_is_a_config_error() {
    let run = Run::new(HALFSPACE);
    let o = run.exec(&["analyze", "run.toml", "--field", "absent.field"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("absent.field"), "{}", stderr(&o));
}

#[test]
fn solved_field_round_trips_and_feeds_analyze() {
    let run = Run::new(HALFSPACE);
    assert_eq!(code(&run.exec(&["solve", "run.toml"])), 0);
    let u = load_field(&run.out("u.field")).unwrap();
    let copy = run.dir.path().join("copy.field");
    save_field(&copy, &u).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), std::fs::read(run.out("u.field")).unwrap());
    let back = load_field(&copy).unwrap();
    assert!(back.values().iter().zip(u.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    let o = run.exec(&["analyze", "run.toml", "--field", "copy.field", "--mask", "out/mask.field"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn operators_validate_accepts_pucci() {
    let cfg = HALFSPACE.replacen(
        "kind = \"linear\"\nmatrix = [1.0]\nlambda0 = 1.0\nlambda1 = 1.0",
        "kind = \"pucci_plus\"\nlambda0 = 0.5\nlambda1 = 2.0",
        1,
    );
    let run = Run::new(&cfg);
    let o = run.exec(&["operators", "validate", "run.toml", "--samples", "200", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn verify_detects_an_injected_pucci_sign_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = parafree(&["verify", "--coarse", "--inject-fault", "pucci-sign", "--only", "1"], dir.path());
    assert_eq!(code(&o), 3);
    let text = stdout(&o) + &stderr(&o);
    assert!(text.contains("sandwich"), "{text}");
}

#[test]
fn verify_single_criterion_passes_coarse() {
    let dir = tempfile::tempdir().unwrap();
    let o = parafree(&["verify", "--coarse", "--only", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| !l.trim().is_empty()).count(), 1, "{}", stdout(&o));
}
