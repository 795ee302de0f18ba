use super::*;
use crate::fixtures::{caloric, halfspace, node_mask};
use crate::grid::ScalarField;
use crate::matrix::SymMatrix;
use crate::solver::{Mode, SolveResult};

fn q1_grid(nx: usize) -> SpaceTimeGrid {
    SpaceTimeGrid::new(1, nx, 1.0, -1.0, 0.0, 4.0).unwrap()
}

fn compatible_poly() -> ParabolicPolynomial {
    ParabolicPolynomial { a0: 0.1, b0: [0.2, 0.0], m0: SymMatrix::one(0.8), c0: 0.8 }
}

#[test]
fn compatible_polynomial_is_a_fixed_point() {
    let g = q1_grid(129);
    let p = compatible_poly();
    let u = ScalarField::from_fn(g, |x, t| p.eval(x, t));
    let l = ladder(&u, &Operator::laplacian(1), &LadderOptions::default()).unwrap();
    assert!(l.truncated.is_none() && l.steps.len() >= 4);
    for st in &l.steps[1..] {
        assert!(st.error <= 1e-8, "k={} e={}", st.k, st.error);
        assert!((st.poly.a0 - p.a0).abs() <= 1e-8 && (st.poly.b0[0] - p.b0[0]).abs() <= 1e-8);
        assert!((st.poly.m0.a11() - 0.8).abs() <= 1e-8 && (st.poly.c0 - 0.8).abs() <= 1e-8);
    }
}

#[test]
fn caloric_ladder_converges_to_derivatives() {
    let g = q1_grid(129);
    let u = caloric(g, 1.0);
    let l = ladder(&u, &Operator::laplacian(1), &LadderOptions::default()).unwrap();
    let target = ParabolicPolynomial { a0: 0.0, b0: [0.0; 2], m0: SymMatrix::one(1.0), c0: 1.0 };
    let dist: Vec<f64> = l.steps.iter().map(|s| target.tilde_distance(&s.poly.m0, s.poly.c0)).collect();
    assert!(dist.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{dist:?}");
    assert!(*dist.last().unwrap() <= 1e-8);
    for (k, st) in l.steps.iter().enumerate() {
        assert!(st.error <= 1.5 * l.rho.powi(2 * k as i32), "k={k} e={}", st.error);
        assert!(st.residual.abs() <= 1e-10);
    }
    assert!(l.contracts());
}

#[test]
fn halfspace_ladder_constant_is_bounded() {
    let op = Operator::laplacian(1);
    let l = ladder(&halfspace(&op, q1_grid(129), [1.0, 0.0]).unwrap().field, &op, &LadderOptions::default()).unwrap();
    assert!(l.fitted_c <= 1.0, "C={}", l.fitted_c);
    assert!(l.steps.iter().all(|s| s.residual.abs() <= 1e-10));
    let rows = pointwise_bmo(&l, &[0.5, 0.3, 0.1]);
    assert_eq!(rows[1].k, 2);
    assert!(rows.iter().all(|r| r.ratio <= l.fitted_c));
}

#[test]
fn resolution_limit_counts_nodes() {
    // h = 1/64: Q_{1/16} spans 9 nodes, Q_{1/32} only 5
    assert_eq!(resolution_limit(&q1_grid(129), 0.5, 10), 4);
    assert_eq!(resolution_limit(&q1_grid(129), 0.5, 2), 2);
}

#[test]
fn rejects_large_data() {
    let g = q1_grid(33);
    let u = ScalarField::from_fn(g, |_, _| 2.0);
    assert!(matches!(ladder(&u, &Operator::laplacian(1), &LadderOptions::default()), Err(Error::Precondition(_))));
}

#[test]
fn lp_means() {
    let op = Operator::laplacian(1);
    let g = q1_grid(129);
    let p = compatible_poly();
    let u = ScalarField::from_fn(g, |x, t| p.eval(x, t));
    let l = ladder(&u, &op, &LadderOptions::default()).unwrap();
    let rows = lp_bmo(&u, &l, 2.0, None).unwrap();
    assert!(rows[1..].iter().all(|r| r.mean <= 1e-8));

    let hs = halfspace(&op, g, [1.0, 0.0]).unwrap();
    let l = ladder(&hs.field, &op, &LadderOptions::default()).unwrap();
    let band = 2.0 * g.h();
    let m2 = lp_bmo(&hs.field, &l, 2.0, Some((&hs.mask, band))).unwrap();
    let m1 = lp_bmo(&hs.field, &l, 1.0, Some((&hs.mask, band))).unwrap();
    for (a, b) in m1.iter().zip(&m2) {
        assert!(a.mean <= b.mean + 1e-12);
        assert!(b.mean <= 2.0 && b.excluded > 0);
    }
}

#[test]
fn normalize_scales_the_equation() {
    let g = q1_grid(65);
    let u = ScalarField::from_fn(g, |x, t| 0.25 * x[0].powi(4) + t * t);
    let op = Operator::pucci_plus(1, 1.0, 2.0).unwrap();
    let (same, _) = normalize(&u, &op, 1.0).unwrap();
    assert_eq!(same, u);
    let (v, op4) = normalize(&u, &op, 4.0).unwrap();
    let sup_h = |f: &ScalarField, op: &Operator| {
        let g = f.grid();
        (1..g.nt())
            .flat_map(|m| (1..g.nx() - 1).map(move |s| (m, s)))
            .map(|(m, s)| {
                let d = f.differentials(m, s).unwrap();
                op.eval_h(&d.hess, d.ut).unwrap().abs()
            })
            .fold(0.0, f64::max)
    };
    let (a, b) = (sup_h(&u, &op), sup_h(&v, &op4));
    assert!((b - a / 16.0).abs() <= 1e-9 * a, "{a} {b}");
    assert!(normalize(&u, &op, 0.5).is_err());
}

#[test]
fn density_of_halfspace_and_full_masks() {
    let op = Operator::laplacian(1);
    let g = q1_grid(129);
    let hs = halfspace(&op, g, [1.0, 0.0]).unwrap();
    let t = density_decay(&hs, None, ([0.0, 0.0], 0.0), &[0.5, 0.25, 0.125]).unwrap();
    for row in &t.rows {
        // |Q₁| = 2 and Λ is the left half
        assert!((row.measure - 1.0).abs() <= 1e-12, "{row:?}");
        assert_eq!(row.ratio, Some(1.0));
        assert_eq!(row.decays, Some(false));
    }
    assert_eq!(t.threshold, None);
    let full = SolveResult::from_exact(hs.field.clone(), vec![true; g.len()], Mode::A).unwrap();
    let t = density_decay(&full, None, ([0.0, 0.0], 0.0), &[0.5, 0.25]).unwrap();
    assert!(t.rows.iter().all(|r| r.measure == 0.0 && r.ratio.is_none()));
}

#[test]
fn decompose_recovers_manufactured_remainder() {
    let op = Operator::laplacian(1);
    let g = q1_grid(129);
    // u = v + w with v = x²/2 solving v'' − v_t = 1 and w vanishing on ∂ₚQ₁
    let w = |x: f64, t: f64| 0.1 * (1.0 - x * x) * (t + 1.0);
    let u = ScalarField::from_fn(g, |x, t| 0.5 * x[0] * x[0] + w(x[0], t));
    let res = SolveResult::from_exact(u, vec![true; g.len()], Mode::A).unwrap();
    let d =
        decompose(&res, &ParabolicPolynomial::zero(1), &op, ([0.0, 0.0], 0.0), 1.0, &SolveParams::default()).unwrap();
    let tg = *d.w.grid();
    let err = (0..tg.len())
        .filter(|&i| tg.position(tg.unflat(i).1)[0].abs() <= 1.0)
        .map(|i| {
            let (m, s) = tg.unflat(i);
            (d.w.values()[i] - w(tg.position(s)[0], tg.time(m))).abs()
        })
        .fold(0.0, f64::max);
    assert!(err <= 1e-9, "err={err}");
    assert!(d.abp_ratio.is_none());

    // Ω = Q₁ and H(u) = 1: nothing is left for w
    let v = ScalarField::from_fn(g, |x, _| 0.5 * x[0] * x[0]);
    let res = SolveResult::from_exact(v, node_mask(&g, |_, _| true), Mode::A).unwrap();
    let d =
        decompose(&res, &ParabolicPolynomial::zero(1), &op, ([0.0, 0.0], 0.0), 0.5, &SolveParams::default()).unwrap();
    assert!(d.sup_w <= 1e-9);
}
