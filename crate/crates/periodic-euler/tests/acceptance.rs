//! Acceptance suite: every verification criterion as its own test, printing
//! one pass/fail line each. The same checks back the CLI's `--self-test`.

use periodic_euler::selftest::{self, CriterionResult};

fn assert_criterion(r: CriterionResult) {
    println!("{r}");
    assert!(r.pass, "{r}");
}

#[test]
fn acceptance_01_roundtrip_algebra() {
    assert_criterion(selftest::criterion_1());
}

#[test]
fn acceptance_02_zero_forcing_identity() {
    assert_criterion(selftest::criterion_2());
}

#[test]
fn acceptance_03_background_exactness_and_order() {
    assert_criterion(selftest::criterion_3());
}

#[test]
fn acceptance_04_periodicity_onset() {
    assert_criterion(selftest::criterion_4());
}

#[test]
fn acceptance_05_supersonic_floor() {
    assert_criterion(selftest::criterion_5());
}

#[test]
fn acceptance_06_linear_response() {
    assert_criterion(selftest::criterion_6());
}

#[test]
fn acceptance_07_energy_functional() {
    assert_criterion(selftest::criterion_7());
}

#[test]
fn acceptance_08_cross_solver_oracle() {
    assert_criterion(selftest::criterion_8());
}

#[test]
fn acceptance_09_h2_growth() {
    assert_criterion(selftest::criterion_9());
}

#[test]
fn acceptance_10_determinism() {
    assert_criterion(selftest::criterion_10());
}
