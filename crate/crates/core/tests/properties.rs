mod common;

use common::*;
use epsconv::Tolerances;
use proptest::prelude::*;

fn tol() -> Tolerances {
    Tolerances::default()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn subdiff_grows_with_eps(case in arb_fn_case(), e1 in 0.0..3.0f64, e2 in 0.0..3.0f64) {
        subdiff_monotone(&case, e1, e2, &tol()).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn normals_grow_with_eps(case in arb_set_case(), e1 in 0.0..3.0f64, e2 in 0.0..3.0f64) {
        normal_monotone(&case, e1, e2, &tol()).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn scaled_function_scales_subdiff(case in arb_fn_case(), eps in 0.05..3.0f64, lambda in 0.2..5.0f64) {
        scaling_identity(&case, eps, lambda, &tol()).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn subdiff_agrees_with_brute_force(case in arb_fn_case(), eps in 0.05..3.0f64) {
        subdiff_matches_oracle(&case, eps, &tol()).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn normals_agree_with_brute_force(case in arb_set_case(), eps in 0.0..2.0f64) {
        normal_matches_oracle(&case, eps, &tol()).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn two_dimensional_subdiffs_agree_with_brute_force() {
    for (case, eps) in fn_cases_2d() {
        subdiff_matches_oracle(&case, eps, &tol()).unwrap();
    }
}

#[test]
fn polars_agree_with_brute_force() {
    for case in set_cases() {
        polar_matches_oracle(&case.set, &tol()).unwrap();
    }
}

#[test]
fn normal_set_is_scaled_polar() {
    for case in set_cases() {
        for eps in [0.5, 1.0, 2.0] {
            normal_equals_scaled_polar(&case, eps, &tol()).unwrap();
        }
    }
}

#[test]
fn separable_double_inclusions() {
    for (a, b, eps) in separable_cases() {
        separable_double_inclusion(&a, &b, eps, &tol()).unwrap();
    }
}

#[test]
fn value_conjugate_reduces_to_joint_conjugate() {
    for (name, p) in parametric_problems() {
        reduction_identity(name, &p, &tol()).unwrap();
    }
}

#[test]
fn biconjugate_recovers_closed_functions() {
    for f in closed_functions() {
        biconjugate_idempotent(&f, &tol()).unwrap();
    }
}

#[test]
fn continuity_condition_implies_the_others() {
    let corpus = regularity_corpus();
    for f1 in &corpus {
        for f2 in &corpus {
            regularity_implication(f1, f2, &tol()).unwrap();
        }
    }
}
