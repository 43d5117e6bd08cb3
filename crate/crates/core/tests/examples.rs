//! Runs every example and checks the quantities it reports.

#[path = "../examples/sequence_norms.rs"]
mod sequence_norms;
#[path = "../examples/cocycle_certificate.rs"]
mod cocycle_certificate;
#[path = "../examples/green_solve.rs"]
mod green_solve;
#[path = "../examples/rate_extraction.rs"]
mod rate_extraction;
#[path = "../examples/projection_recovery.rs"]
mod projection_recovery;
#[path = "../examples/catmap_splitting.rs"]
mod catmap_splitting;
#[path = "../examples/nonuniform_certificate.rs"]
mod nonuniform_certificate;
#[path = "../examples/file_round_trip.rs"]
mod file_round_trip;

#[test]
fn sequence_norms_power_orlicz_is_l3() {
    let s = sequence_norms::run_example().unwrap();
    // (0.125 + 1 + 8 + 1/64 + 27/64 + 3.375)^(1/3)
    let oracle = (0.125f64 + 1.0 + 8.0 + 0.015625 + 0.421875 + 3.375).cbrt();
    assert!((s.lp3 - oracle).abs() < 1e-12);
    assert!((s.orlicz_power3 - oracle).abs() < 1e-9);
    assert!(s.causal_norm <= s.causal_bound);
}

#[test]
fn cocycle_certificate_passes() {
    assert!(cocycle_certificate::run_example().unwrap().passes);
}

#[test]
fn green_solve_matches_closed_form() {
    let s = green_solve::run_example().unwrap();
    assert!(s.closed_form_error < 1e-14);
    assert!(s.green_vs_direct < 1e-12);
}

#[test]
fn rate_extraction_finds_stable_threshold() {
    let r = rate_extraction::run_example().unwrap();
    assert!((r.z_star / 4.0 - 1.0).abs() < 0.02);
}

#[test]
fn projection_recovery_is_consistent() {
    let s = projection_recovery::run_example().unwrap();
    assert!(s.idempotence < 1e-8 && s.intertwining < 1e-8);
    assert!(s.equivalence_passes);
}

#[test]
fn catmap_splitting_is_the_eigenbasis() {
    let s = catmap_splitting::run_example().unwrap();
    assert!(s.max_sine < 1e-6);
    assert!(s.passes && s.inverse_norm_upper <= 1.05 * s.d_theory);
}

#[test]
fn nonuniform_constants_grow_at_epsilon() {
    let ck = nonuniform_certificate::run_example().unwrap();
    assert!(ck.tempered.passes);
    assert!((ck.tempered.observed_c_rate - 0.05).abs() < 5e-3);
}

#[test]
fn file_round_trip_and_analyze() {
    let s = file_round_trip::run_example().unwrap();
    assert!(s.exact);
    assert_eq!(s.exit_code, 0);
    assert!(s.report.dichotomy);
}
