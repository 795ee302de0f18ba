use proptest::prelude::*;

use parafree::analysis::minimal_diameter;
use parafree::config::RunConfig;
use parafree::grid::{cylinder_nodes, rescale_field, ParabolicCylinder, ScalarField, SpaceTimeGrid};
use parafree::ladder::{ladder, LadderOptions};
use parafree::matrix::SymMatrix;
use parafree::ops::{brute_pucci, pucci_minus, pucci_plus, Operator};
use parafree::report::{num, Table};
use parafree::solver::{
    policy_residual_histories, solve_dirichlet, solve_free_boundary, Mode, Region, SolveParams, Source,
};

fn sym(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-3.0f64..3.0, 3).prop_map(move |e| {
        if n == 1 {
            SymMatrix::one(e[0])
        } else {
            SymMatrix::two(e[0], e[1], e[2])
        }
    })
}

/// Positive semidefinite matrix of dimension `n`.
fn psd(n: usize) -> impl Strategy<Value = SymMatrix> {
    (prop::collection::vec(-2.0f64..2.0, 2), prop::collection::vec(-2.0f64..2.0, 2)).prop_map(move |(a, b)| {
        if n == 1 {
            SymMatrix::one(a[0] * a[0] + b[0] * b[0])
        } else {
            SymMatrix::outer(&a) + SymMatrix::outer(&b)
        }
    })
}

fn ellipticity() -> impl Strategy<Value = (f64, f64)> {
    (0.2f64..1.5, 0.0f64..2.0).prop_map(|(l0, d)| (l0, l0 + d))
}

/// Random validated operator of each kind.
fn operator(n: usize) -> impl Strategy<Value = Operator> {
    (ellipticity(), 0usize..4, prop::collection::vec(0.0f64..1.0, 6)).prop_map(move |((l0, l1), kind, w)| {
        let coef = |i: usize| l0 + (l1 - l0) * w[i];
        let diag = |i: usize| if n == 1 { SymMatrix::one(coef(i)) } else { SymMatrix::diag(&[coef(i), coef(i + 1)]) };
        match kind {
            0 => Operator::pucci_plus(n, l0, l1).unwrap(),
            1 => Operator::pucci_minus(n, l0, l1).unwrap(),
            2 => Operator::linear(diag(0), l0, l1).unwrap(),
            _ => Operator::bellman(vec![diag(0), diag(2), diag(4)], l0, l1).unwrap(),
        }
    })
}

fn op_and_matrices() -> impl Strategy<Value = (Operator, SymMatrix, SymMatrix)> {
    (1usize..=2).prop_flat_map(|n| (operator(n), sym(n), sym(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sandwich_between_pucci_extremes((op, x, y) in op_and_matrices()) {
        let d = op.eval_f(&x).unwrap() - op.eval_f(&y).unwrap();
        let (l0, l1) = (op.lambda0(), op.lambda1());
        prop_assert!(pucci_minus(l0, l1, &(x - y)) <= d + 1e-12);
        prop_assert!(d <= pucci_plus(l0, l1, &(x - y)) + 1e-12);
    }

    #[test]
    fn order_preserving((op, m, _) in op_and_matrices(), p in psd(2)) {
        let p = if op.dim() == 1 { SymMatrix::one(p.a11()) } else { p };
        prop_assert!(op.eval_f(&m).unwrap() <= op.eval_f(&(m + p)).unwrap() + 1e-12);
    }

    #[test]
    fn positively_homogeneous((op, m, _) in op_and_matrices(), s in 0.0f64..5.0) {
        let lhs = op.eval_f(&(m * s)).unwrap();
        let rhs = s * op.eval_f(&m).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn pucci_closed_form_matches_brute_force(n in 1usize..=2, m in sym(2), (l0, l1) in ellipticity()) {
        let m = if n == 1 { SymMatrix::one(m.a11()) } else { m };
        let (sup, inf) = brute_pucci(l0, l1, &m, 50);
        prop_assert!((pucci_plus(l0, l1, &m) - sup).abs() <= 1e-10);
        prop_assert!((pucci_minus(l0, l1, &m) - inf).abs() <= 1e-10);
    }

    #[test]
    fn differentials_exact_on_parabolic_polynomials(
        n in 1usize..=2,
        c in prop::collection::vec(-2.0f64..2.0, 7),
        node in (1usize..8, 1usize..8, 1usize..4),
    ) {
        let g = SpaceTimeGrid::new(n, 9, 1.0, 0.0, 0.1, 0.5).unwrap();
        let m = if n == 1 { SymMatrix::one(c[0]) } else { SymMatrix::two(c[0], c[1], c[2]) };
        let f = ScalarField::from_fn(g, |x, t| {
            let quad = if n == 1 { c[0] * x[0] * x[0] } else { c[0] * x[0] * x[0] + 2.0 * c[1] * x[0] * x[1] + c[2] * x[1] * x[1] };
            c[3] + c[4] * x[0] + if n == 2 { c[5] * x[1] } else { 0.0 } + 0.5 * quad + c[6] * t
        });
        let s = if n == 1 { node.0 } else { g.join([node.0, node.1]) };
        let d = f.differentials(node.2.min(g.nt() - 1), s).unwrap();
        prop_assert!((d.hess - m).max_abs_entry() <= 1e-12 * 64.0);
        prop_assert!((d.ut - c[6]).abs() <= 1e-12 * 64.0);
    }

    #[test]
    fn cylinder_nodes_partition_the_closed_cylinder(
        n in 1usize..=2,
        cx in -0.5f64..0.5,
        t0 in -0.5f64..0.0,
        r in 0.13f64..0.5,
    ) {
        let g = SpaceTimeGrid::new(n, 17, 1.0, -1.0, 0.0, 1.0).unwrap();
        let cyl = ParabolicCylinder::new([cx, 0.0], t0, r);
        let (a, b) = cylinder_nodes(&g, &cyl).unwrap();
        prop_assert!(a.iter().all(|i| !b.contains(i)));
        let st = 1e-9;
        for i in 0..g.len() {
            let (m, s) = g.unflat(i);
            let inside = cyl.spatial_distance(&g, &g.position(s)) <= r + st * g.h()
                && g.time(m) >= t0 - r * r - st * g.dt()
                && g.time(m) <= t0 + st * g.dt();
            prop_assert_eq!(inside, a.contains(i) || b.contains(i));
        }
    }

    #[test]
    fn rescaling_composes(r in 0.3f64..0.9, s in 0.3f64..0.9) {
        let g = SpaceTimeGrid::new(1, 65, 1.0, -1.0, 0.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |x, t| x[0].powi(3) + x[0] * t + t);
        let origin = ([0.0, 0.0], 0.0);
        let ur = rescale_field(&u, origin, r, g).unwrap();
        let urs = rescale_field(&ur, origin, s, g).unwrap();
        let direct = rescale_field(&u, origin, r * s, g).unwrap();
        let h2 = g.h() * g.h();
        let tol = 2.0 * 0.75 * h2 * (1.0 / (r * r) + r) / (s * s) + 2.0 * 0.75 * h2 / (r * s).powi(2);
        let worst = urs.values().iter().zip(direct.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= tol, "worst={} tol={}", worst, tol);
    }

    #[test]
    fn minimal_diameter_rotation_invariant_and_monotone(
        pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..40),
        angle in 0.0f64..std::f64::consts::TAU,
        keep in 2usize..40,
    ) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|p| [p.0, p.1]).collect();
        let (c, s) = (angle.cos(), angle.sin());
        let rotated: Vec<[f64; 2]> = pts.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect();
        let md = minimal_diameter(&pts, 2);
        prop_assert!((md - minimal_diameter(&rotated, 2)).abs() <= 1e-9);
        let subset = &pts[..keep.min(pts.len())];
        prop_assert!(minimal_diameter(subset, 2) <= md + 1e-12);
        let xs: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], 0.0]).collect();
        prop_assert!(minimal_diameter(&xs[..keep.min(xs.len())], 1) <= minimal_diameter(&xs, 1));
    }

    #[test]
    fn table_cells_reparse_exactly(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["v"]);
        for v in &values {
            t.push(vec![num(*v)]);
        }
        t.write(&path).unwrap();
        let back = Table::read(&path).unwrap();
        let parsed: Vec<f64> = back.column("v").unwrap().iter().map(|c| c.parse().unwrap()).collect();
        prop_assert!(parsed.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn unknown_config_keys_are_rejected(section in 0usize..4, key in "[a-z]{3,10}_x") {
        let sections = ["[operator]", "[grid]", "[problem]", "[analysis]"];
        let base = "[operator]\nkind = \"pucci_plus\"\nlambda0 = 1.0\nlambda1 = 2.0\n\n[grid]\nn = 1\nnx = 17\n\n[problem]\nmode = \"A\"\nfixture = \"zero\"\n\n[analysis]\n";
        let text = base.replace(sections[section], &format!("{}\n{key} = 1", sections[section]));
        let err = RunConfig::parse(&text).unwrap_err();
        prop_assert!(err.message.contains(&key));
    }
}

/// Data on a 1D grid from a seed; interior values are ignored by the solvers.
fn seeded_data(g: SpaceTimeGrid, seed: &[f64]) -> ScalarField {
    ScalarField::from_fn(g, |x, t| seed[0] + seed[1] * x[0] + seed[2] * (3.0 * x[0] + seed[3]).sin() + seed[4] * t)
}

fn monotone_operator() -> impl Strategy<Value = Operator> {
    operator(1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discrete_comparison_principle(
        op in monotone_operator(),
        seed in prop::collection::vec(-1.0f64..1.0, 5),
        lift in 0.0f64..0.5,
        g1 in -1.0f64..1.0,
        dg in 0.0f64..1.0,
    ) {
        let g = SpaceTimeGrid::new(1, 17, 1.0, 0.0, 0.1, 1.0).unwrap();
        let low = seeded_data(g, &seed);
        let mut high = low.clone();
        high.values_mut().iter_mut().enumerate().for_each(|(i, v)| *v += lift * (1.0 + (i % 3) as f64));
        let p = SolveParams::default();
        // larger data and smaller source give the larger solution
        let u_high = solve_dirichlet(&op, Region::Box, &high, Source::Constant(g1), &p).unwrap();
        let u_low = solve_dirichlet(&op, Region::Box, &low, Source::Constant(g1 + dg), &p).unwrap();
        let worst = u_high.values().iter().zip(u_low.values()).map(|(a, b)| b - a).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(worst <= 1e-9, "u_low exceeds u_high by {}", worst);
    }

    #[test]
    fn policy_steps_do_not_increase_the_residual(
        op in monotone_operator(),
        seed in prop::collection::vec(-1.0f64..1.0, 5),
        src in -2.0f64..2.0,
    ) {
        let g = SpaceTimeGrid::new(1, 33, 1.0, 0.0, 0.05, 1.0).unwrap();
        let data = seeded_data(g, &seed);
        let hist = policy_residual_histories(&op, &data, Source::Constant(src), &SolveParams::default()).unwrap();
        for h in &hist {
            for w in h.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "{:?}", h);
            }
        }
    }

    #[test]
    fn mode_a_keeps_nonnegative_data_above_minus_10h2(
        op in monotone_operator(),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        shift in -0.5f64..0.5,
    ) {
        let g = SpaceTimeGrid::new(1, 33, 1.0, -0.25, 0.0, 1.0).unwrap();
        let data = ScalarField::from_fn(g, |x, _| a * (x[0] - shift).max(0.0).powi(2) + b * (x[0] + 0.5).min(0.0).powi(2));
        let res = solve_free_boundary(&op, &data, Mode::A, &SolveParams::default()).unwrap();
        let h = g.h();
        let low = res.field.values().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(low >= -10.0 * h * h, "min {}", low);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn ladder_members_solve_the_homogeneous_equation(scale in 0.1f64..1.0, l1 in 1.0f64..2.0) {
        let g = SpaceTimeGrid::new(1, 129, 1.0, -1.0, 0.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |x, t| scale * (0.5 * x[0] * x[0] + t) * 0.5);
        let op = Operator::pucci_plus(1, 1.0, l1).unwrap();
        let lad = ladder(&u, &op, &LadderOptions { k_max: 4, ..LadderOptions::default() }).unwrap();
        for st in &lad.steps {
            prop_assert!(st.residual.abs() <= 1e-10);
            prop_assert!(st.poly.residual(&op).unwrap().abs() <= 1e-10);
        }
    }
}
