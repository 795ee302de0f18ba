//! One test per acceptance criterion; each prints its pass/fail line.

use parafree::suite::{run_criterion, SuiteOptions};

fn check(id: usize) {
    let outcome = run_criterion(id, &SuiteOptions::default());
    println!("{outcome}");
    assert!(outcome.pass, "{outcome}");
}

#[test]
fn criterion_01_operator_oracle() {
    check(1);
}

#[test]
fn criterion_02_halfspace_coefficient() {
    check(2);
}

#[test]
fn criterion_03_stationary_halfspace() {
    check(3);
}

#[test]
fn criterion_04_nonconvex_control() {
    check(4);
}

#[test]
fn criterion_05_nondegeneracy() {
    check(5);
}

#[test]
fn criterion_06_polynomial_ladder() {
    check(6);
}

#[test]
fn criterion_07_thickness() {
    check(7);
}

#[test]
fn criterion_08_directional_monotonicity() {
    check(8);
}

#[test]
fn criterion_09_blowup_signature() {
    check(9);
}

#[test]
fn criterion_10_density_identity() {
    check(10);
}
