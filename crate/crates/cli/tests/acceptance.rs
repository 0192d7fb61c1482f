//! Acceptance gate: one test per criterion, each printing its one-line
//! verdict so `cargo test --test acceptance -- --nocapture` doubles as the
//! sign-off report.

use platelab_cli::acceptance::{run_all, CriterionResult};

fn gate(name: &str) -> CriterionResult {
    let mut results = run_all(Some(name));
    assert_eq!(results.len(), 1, "criterion name {name} did not select exactly one check");
    results.remove(0)
}

fn assert_criterion(name: &str) {
    let r = gate(name);
    println!("{}", r.line());
    assert!(r.passed, "{}", r.detail);
}

#[test]
fn acceptance_luxemburg_norm() {
    assert_criterion("luxemburg_norm");
}

#[test]
fn acceptance_modular_sandwich() {
    assert_criterion("modular_sandwich");
}

#[test]
fn acceptance_dissipation_order() {
    assert_criterion("dissipation_order");
}

#[test]
fn acceptance_invariant_sets() {
    assert_criterion("invariant_sets");
}

#[test]
fn acceptance_blowup_time_ordering() {
    assert_criterion("blowup_time_ordering");
}

#[test]
fn acceptance_high_energy_growth() {
    assert_criterion("high_energy_growth");
}

#[test]
fn acceptance_lower_bound_oracle() {
    assert_criterion("lower_bound_oracle");
}

#[test]
fn acceptance_decay_certificate() {
    assert_criterion("decay_certificate");
}

#[test]
fn acceptance_constant_formulas() {
    assert_criterion("constant_formulas");
}

#[test]
fn acceptance_discretization_convergence() {
    assert_criterion("discretization_convergence");
}
