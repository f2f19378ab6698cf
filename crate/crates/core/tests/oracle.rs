//! The Monte Carlo and maximum-likelihood oracle suites, plus the negative
//! control that a perturbed coefficient is caught.

use bmeb::oracle::{evidence_truncation_order, run_suite, OracleOptions, Suite, TRUNCATION_GAMMAS};

fn run(suite: Suite, perturbation: f64) -> bmeb::oracle::SuiteReport {
    run_suite(
        suite,
        &OracleOptions {
            seed: 0,
            perturbation,
        },
    )
    .unwrap()
}

#[test]
fn monte_carlo_suite_passes() {
    let report = run(Suite::Mc, 0.0);
    let failures: Vec<_> = report.failures().collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn maximum_likelihood_suite_passes() {
    let report = run(Suite::Ml, 0.0);
    let failures: Vec<_> = report.failures().collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn perturbed_coefficients_are_caught() {
    assert!(run(Suite::Georges, 0.0).passed());
    assert!(!run(Suite::Georges, 1e-6).passed());
}

#[test]
fn approximation_error_is_third_order() {
    let t = evidence_truncation_order(1).unwrap();
    assert_eq!(t.points.len(), TRUNCATION_GAMMAS.len());
    assert!(t.slope > 2.5, "slope {} from {:?}", t.slope, t.points);
}
