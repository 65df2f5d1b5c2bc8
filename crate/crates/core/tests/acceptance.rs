use primeend::acceptance::{run_criterion, AcceptanceConfig};
use std::io::Write;

fn criterion(id: u32) {
    let r = run_criterion(id, &AcceptanceConfig::default()).unwrap_or_else(|e| panic!("criterion {id}: {e}"));
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{}", r.line());
    for c in r.checks.iter().filter(|c| !c.pass) {
        let _ = writeln!(err, "       {}: {}", c.name, c.value);
    }
    assert!(r.pass, "{}", r.line());
}

#[test]
fn criterion_01_slit_disk_prime_end_counts() {
    criterion(1);
}

#[test]
fn criterion_02_topologists_comb() {
    criterion(2);
}

#[test]
fn criterion_03_two_segment_condenser_bound() {
    criterion(3);
}

#[test]
fn criterion_04_annulus_capacity_oracle() {
    criterion(4);
}

#[test]
fn criterion_05_finite_connectedness_verdicts() {
    criterion(5);
}

#[test]
fn criterion_06_prime_end_count_matches_stabilized_n() {
    criterion(6);
}

#[test]
fn criterion_07_non_separated_prime_ends() {
    criterion(7);
}

#[test]
fn criterion_08_mazurkiewicz_distance() {
    criterion(8);
}

#[test]
fn criterion_09_prime_ends_versus_clusters() {
    criterion(9);
}

#[test]
fn criterion_10_modulus_solver_properties() {
    criterion(10);
}

#[test]
fn criterion_11_decay_independence_of_compact_set() {
    criterion(11);
}

#[test]
fn criterion_12_john_suite() {
    criterion(12);
}

#[test]
fn criterion_13_decaying_chains_are_singletons() {
    criterion(13);
}

#[test]
fn criterion_14_pointwise_dimension() {
    criterion(14);
}

#[test]
fn criterion_15_deterministic_regression_report() {
    criterion(15);
}
