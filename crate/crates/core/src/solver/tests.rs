use super::*;
use crate::fixtures::{caloric, halfspace, halfspace_field, nonconvex_example, polynomial_p2};
use crate::matrix::SymMatrix;

fn sup_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn recovers_caloric_solution() {
    let g = SpaceTimeGrid::new(1, 65, 1.0, 0.0, 0.25, 1.0).unwrap();
    let w = caloric(g, 2.0);
    let mut data = w.clone();
    for m in 1..g.nt() {
        for s in 1..g.nx() - 1 {
            data.level_mut(m)[s] = 0.0;
        }
    }
    let u =
        solve_dirichlet(&Operator::laplacian(1), Region::Box, &data, Source::Constant(0.0), &SolveParams::default())
            .unwrap();
    assert!(sup_diff(&u, &w) <= 1e-9, "err={}", sup_diff(&u, &w));
}

#[test]
fn reproduces_operator_compatible_polynomial_2d() {
    let a = SymMatrix::two(2.0, 0.5, 1.0);
    let op = Operator::linear(a, 0.5, 3.0).unwrap();
    let m = SymMatrix::two(1.0, -0.4, 0.6);
    let c = a.trace_mul(&m);
    let g = SpaceTimeGrid::new(2, 17, 1.0, 0.0, 0.05, 1.0).unwrap();
    let p = ScalarField::from_fn(g, |x, t| {
        0.3 + 0.5 * (m.a11() * x[0] * x[0] + 2.0 * m.a12() * x[0] * x[1] + m.a22() * x[1] * x[1]) + c * t
    });
    let u = solve_dirichlet(&op, Region::Box, &p, Source::Constant(0.0), &SolveParams::default()).unwrap();
    assert!(sup_diff(&u, &p) <= 1e-8, "err={}", sup_diff(&u, &p));
}

#[test]
fn pucci_net_halfspace_is_stationary() {
    let op = Operator::pucci_plus(1, 1.0, 2.0).unwrap();
    let g = SpaceTimeGrid::new(1, 129, 1.0, 0.0, 0.25, 1.0).unwrap();
    let exact = halfspace_field(g, 0.5, [1.0, 0.0]);
    let chi = ScalarField::from_fn(g, |x, _| if x[0] > 0.0 { 1.0 } else { 0.0 });
    let u = solve_dirichlet(&op, Region::Box, &exact, Source::Field(&chi), &SolveParams::default()).unwrap();
    let h = g.h();
    assert!(sup_diff(&u, &exact) <= 10.0 * h * h, "err={}", sup_diff(&u, &exact));
}

#[test]
fn cylinder_region_keeps_outside_values() {
    let g = SpaceTimeGrid::new(1, 65, 1.0, -1.0, 0.0, 1.0).unwrap();
    let w = caloric(g, 1.0);
    let cyl = ParabolicCylinder::at_origin(0.5);
    let u = solve_dirichlet(
        &Operator::laplacian(1),
        Region::Cylinder(cyl),
        &w,
        Source::Constant(0.0),
        &SolveParams::default(),
    )
    .unwrap();
    assert!(sup_diff(&u, &w) <= 1e-9);
    // source 1 changes only the cylinder interior
    let v = solve_dirichlet(
        &Operator::laplacian(1),
        Region::Cylinder(cyl),
        &w,
        Source::Constant(1.0),
        &SolveParams::default(),
    )
    .unwrap();
    let (interior, _) = cylinder_nodes(&g, &cyl).unwrap();
    for i in 0..g.len() {
        if !interior.contains(i) {
            assert_eq!(v.values()[i], w.values()[i]);
        }
    }
    assert!(sup_diff(&v, &w) > 1e-4);
}

#[test]
fn rejects_non_monotone_family() {
    let op = Operator::linear(SymMatrix::two(1.0, 1.2, 2.0), 0.1, 3.0).unwrap();
    let g = SpaceTimeGrid::new(2, 9, 1.0, 0.0, 0.1, 1.0).unwrap();
    let err = solve_dirichlet(&op, Region::Box, &ScalarField::zeros(g), Source::Constant(0.0), &SolveParams::default());
    assert!(matches!(err, Err(Error::NonMonotoneStencil { .. })));
}

#[test]
fn zero_data_gives_zero_solution() {
    let g = SpaceTimeGrid::new(2, 17, 1.0, 0.0, 0.05, 1.0).unwrap();
    for mode in [Mode::A, Mode::B] {
        let r = solve_free_boundary(&Operator::laplacian(2), &ScalarField::zeros(g), mode, &SolveParams::default())
            .unwrap();
        assert!(r.field.values().iter().all(|&v| v == 0.0));
        assert!(r.mask.iter().all(|&b| !b) && r.converged());
    }
}

#[test]
fn mode_a_halfspace_is_nearly_stationary() {
    let op = Operator::laplacian(1);
    let g = SpaceTimeGrid::new(1, 129, 1.0, 0.0, 0.25, 1.0).unwrap();
    let exact = halfspace(&op, g, [1.0, 0.0]).unwrap();
    let r = solve_free_boundary(&op, &exact.field, Mode::A, &SolveParams::default()).unwrap();
    assert!(r.converged());
    let h = g.h();
    let dev = (1..g.nt())
        .flat_map(|m| (0..g.nx()).map(move |s| (m, s)))
        .map(|(m, s)| (r.field.at(m, s) - r.field.at(0, s)).abs())
        .fold(0.0, f64::max);
    assert!(dev <= 10.0 * h * h, "dev={dev}, 10h²={}", 10.0 * h * h);
    assert!(r.field.values().iter().all(|&v| v >= -10.0 * h * h));
}

#[test]
fn mode_b_nonconvex_data_verifies() {
    let op = Operator::laplacian(1);
    let g = SpaceTimeGrid::new(1, 129, 1.0, -0.25, 0.0, 1.0).unwrap();
    let exact = nonconvex_example(g).unwrap();
    let params = SolveParams::default();
    let r = solve_free_boundary(&op, &exact.field, Mode::B, &params).unwrap();
    assert!(r.converged());
    let report = verify_solution(&r, &op, &params, 2.0 * g.h()).unwrap();
    assert!(report.pass(), "{report:?}");
}

#[test]
fn verify_exact_fields() {
    let op = Operator::laplacian(1);
    let params = SolveParams::default();
    let g = SpaceTimeGrid::new(1, 65, 1.0, -0.25, 0.0, 1.0).unwrap();
    let hs = halfspace(&op, g, [1.0, 0.0]).unwrap();
    let rep = verify_solution(&hs, &op, &params, 2.0 * g.h()).unwrap();
    assert!(rep.omega_residual.unwrap() <= 1e-9 && rep.pass());

    let ex = nonconvex_example(g).unwrap();
    let rep = verify_solution(&ex, &op, &params, 2.0 * g.h()).unwrap();
    assert!(rep.omega_residual.unwrap() <= 1e-9);
    assert!((rep.complement_sup.unwrap() - 2.0).abs() <= 1e-9 && rep.pass());

    let zero = SolveResult::from_exact(ScalarField::zeros(g), vec![true; g.len()], Mode::A).unwrap();
    let rep = verify_solution(&zero, &op, &params, 2.0 * g.h()).unwrap();
    assert_eq!(rep.omega_residual, Some(1.0));
    assert!(!rep.pass());
}

#[test]
fn compactness_gap_examples() {
    let op = Operator::laplacian(1);
    let params = SolveParams::default();
    let g = SpaceTimeGrid::new(1, 65, 1.0, -1.0, 0.0, 1.0).unwrap();
    let cg = compactness_gap(&op, &caloric(g, 0.5), &params).unwrap();
    assert!(cg.delta <= 1e-9 && cg.gap <= 1e-9, "{cg:?}");

    // H(P₂) = 0.01 with ‖P₂‖ ≤ 1 on Q₁
    let m = SymMatrix::one(1.0);
    let p = ScalarField::from_fn(g, |x, t| 0.5 * x[0] * x[0] + 0.99 * t);
    let cg = compactness_gap(&op, &p, &params).unwrap();
    assert!((cg.delta - 0.01).abs() <= 1e-9);
    assert!(cg.modulus().unwrap() < 1.0 && cg.gap > 0.0, "{cg:?}");
    let _ = polynomial_p2(&op, g, m).unwrap();
}

#[test]
fn outer_cap_one_reports_non_convergence() {
    let op = Operator::laplacian(1);
    let g = SpaceTimeGrid::new(1, 65, 1.0, 0.0, 0.1, 1.0).unwrap();
    let data = ScalarField::from_fn(g, |x, _| if x[0].abs() > 0.5 { 0.2 } else { 0.0 });
    let params = SolveParams { outer_cap: 1, ..Default::default() };
    let r = solve_free_boundary(&op, &data, Mode::A, &params).unwrap();
    assert!(!r.converged());
    assert_ne!(r.mask, r.next_mask);
}

#[test]
fn obstacle_cross_check_agrees_with_mode_a() {
    let op = Operator::laplacian(1);
    let g = SpaceTimeGrid::new(1, 129, 1.0, 0.0, 0.1, 1.0).unwrap();
    let data = halfspace(&op, g, [1.0, 0.0]).unwrap().field;
    let params = SolveParams::default();
    let a = solve_free_boundary(&op, &data, Mode::A, &params).unwrap();
    let b = solve_obstacle(&op, &data, &params).unwrap();
    let h = g.h();
    assert!(sup_diff(&a.field, &b.field) <= 10.0 * h * h, "diff={}", sup_diff(&a.field, &b.field));
    assert!(b.field.values().iter().all(|&v| v >= 0.0));
}

#[test]
fn policy_iteration_on_pucci_minus_2d() {
    let op = Operator::pucci_minus(2, 0.5, 1.0).unwrap();
    let g = SpaceTimeGrid::new(2, 17, 1.0, 0.0, 0.05, 1.0).unwrap();
    let data = ScalarField::from_fn(g, |x, _| x[0] * x[0] - 0.5 * x[1] * x[1]);
    let hist = policy_residual_histories(&op, &data, Source::Constant(0.3), &SolveParams::default()).unwrap();
    for h in hist {
        assert!(*h.last().unwrap() <= 1e-6, "{h:?}");
    }
}

#[test]
fn discrete_operator_is_exact_on_quadratics() {
    let g = SpaceTimeGrid::new(2, 9, 1.0, 0.0, 0.1, 1.0).unwrap();
    let fam = vec![SymMatrix::two(1.0, 0.2, 1.5), SymMatrix::two(2.0, -0.5, 1.0)];
    let op = Operator::bellman(fam, 0.5, 2.5).unwrap();
    let dop = DiscreteOperator::new(&op, None, &g, 2).unwrap();
    let m = SymMatrix::two(0.7, -0.3, -1.1);
    let u: Vec<f64> = (0..g.spatial_len())
        .map(|s| {
            let x = g.position(s);
            0.5 * (m.a11() * x[0] * x[0] + 2.0 * m.a12() * x[0] * x[1] + m.a22() * x[1] * x[1])
        })
        .collect();
    let want = op.eval_f(&m).unwrap();
    for s in (0..g.spatial_len()).filter(|&s| g.is_spatial_interior(s)) {
        assert!((dop.eval(&u, s) - want).abs() <= 1e-10);
    }
}
