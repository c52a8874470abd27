//! Cross-checks of the operator-splitting solver against independent oracle
//! routes: active-set enumeration for tiny instances and a long-run
//! first-order method for mid-size strictly convex ones.

mod common;

use gridplan::qp::{compute_residuals, solve_qp, QpStatus, SolverSettings};

fn oracle_settings() -> SolverSettings {
    SolverSettings {
        eps_abs: 1e-8,
        eps_rel: 1e-8,
        ..SolverSettings::default()
    }
}

#[test]
fn tiny_lps_match_vertex_enumeration() {
    let settings = oracle_settings();
    for seed in 0..20u64 {
        let prob = common::random_tiny_lp(seed);
        let oracle = common::enumeration_oracle(&prob)
            .unwrap_or_else(|| panic!("oracle found no vertex for seed {seed}"));
        let sol = solve_qp(&prob, &settings).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "seed {seed}");
        let rel = (sol.objective - oracle).abs() / oracle.abs().max(1.0);
        assert!(
            rel <= 1e-4,
            "seed {seed}: solver {} vs oracle {} (rel {rel:.2e})",
            sol.objective,
            oracle
        );
    }
}

#[test]
fn tiny_qps_match_active_set_enumeration() {
    let settings = oracle_settings();
    for seed in 100..120u64 {
        let prob = common::random_tiny_qp(seed);
        let oracle = common::enumeration_oracle(&prob)
            .unwrap_or_else(|| panic!("oracle found no candidate for seed {seed}"));
        let sol = solve_qp(&prob, &settings).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "seed {seed}");
        let rel = (sol.objective - oracle).abs() / oracle.abs().max(1.0);
        assert!(
            rel <= 1e-4,
            "seed {seed}: solver {} vs oracle {} (rel {rel:.2e})",
            sol.objective,
            oracle
        );
    }
}

#[test]
fn mid_qps_match_first_order_long_run() {
    let settings = oracle_settings();
    for seed in 200..208u64 {
        let prob = common::random_mid_qp(seed);
        let sol = solve_qp(&prob, &settings).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "seed {seed}");
        let oracle = common::first_order_oracle(&prob);
        let rel = (sol.objective - oracle).abs() / oracle.abs().max(1.0);
        assert!(
            rel <= 1e-4,
            "seed {seed}: solver {} vs oracle {} (rel {rel:.2e})",
            sol.objective,
            oracle
        );
    }
}

#[test]
fn kkt_residuals_small_on_random_instances() {
    let settings = oracle_settings();
    for seed in 300..320u64 {
        let prob = common::random_tiny_qp(seed);
        let sol = solve_qp(&prob, &settings).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        let (rp, rd) = compute_residuals(&prob, &sol.x, &sol.y);
        assert!(rp <= 1e-6 && rd <= 1e-6, "seed {seed}: residuals ({rp:.2e}, {rd:.2e})");
    }
}
