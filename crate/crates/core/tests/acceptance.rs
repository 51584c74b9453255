//! Acceptance gate: the ten headline checks, one test and one printed
//! PASS/FAIL line each (visible with `--nocapture`).

use eraser_sim::verify::run_audit;

fn check(criterion: &str, audit_id: &str) {
    let outcome = run_audit(audit_id, 0.0).expect("audit runnable");
    let tag = if outcome.passed { "PASS" } else { "FAIL" };
    println!("{tag}  {criterion}: {}", outcome.detail);
    assert!(outcome.passed, "{criterion}: {}", outcome.detail);
}

#[test]
fn criterion_01_pure_erasure_equality() {
    check(
        "01 pure-state erasure relation P^2 + C^2 = 1",
        "pure-erasure-equality",
    );
}

#[test]
fn criterion_02_conditional_eraser_headline() {
    check(
        "02 conditional eraser: unit visibility above the unconditional bound",
        "conditional-headline",
    );
}

#[test]
fn criterion_03_bound_chain() {
    check("03 bound chain S*C_cond <= C", "bound-chain");
}

#[test]
fn criterion_04_wootters_oracle_equivalence() {
    check(
        "04 spin-flip concurrence equals its closed form",
        "concurrence-closed-form",
    );
}

#[test]
fn criterion_05_two_particle_visibility_equals_concurrence() {
    check(
        "05 two-particle visibility equals concurrence",
        "two-particle-visibility",
    );
}

#[test]
fn criterion_06_mixed_complementarity() {
    check(
        "06 mixed complementarity and the M = 0.5 sweep dataset",
        "mixed-complementarity",
    );
}

#[test]
fn criterion_07_conventional_mixed_bound() {
    check(
        "07 conventional eraser visibility saturates M sqrt(1 - P^2)",
        "conventional-mixed-bound",
    );
}

#[test]
fn criterion_08_double_partial_scheme() {
    check(
        "08 double-partial scheme closed forms",
        "double-partial",
    );
}

#[test]
fn criterion_09_monte_carlo_consistency() {
    check(
        "09 Monte Carlo fringe fits within 3 sigma in >= 99/100 runs",
        "monte-carlo",
    );
}

#[test]
fn criterion_10_no_coincidence_flatness() {
    check(
        "10 unconditioned fringe is flat",
        "no-coincidence-flatness",
    );
}
