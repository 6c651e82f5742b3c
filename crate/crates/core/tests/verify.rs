use anchortalk::equilibrium::{LinearRule, StepRule};
use anchortalk::gauss::{self, GaussParams};
use anchortalk::model::ModelSpec;
use anchortalk::verify::*;

fn benchmark(p: GaussParams) -> (ModelSpec, LinearRule, gauss::LinearEquilibrium) {
    let eq = gauss::equilibrium(p).unwrap();
    let m = ModelSpec::gaussian_quadratic(p.sigma_theta, p.beta, p.sigma, p.c, p.d).unwrap();
    (m, LinearRule { alpha: eq.alpha, intercept: eq.intercept }, eq)
}

#[test]
fn closed_form_equilibrium_passes_every_check() {
    let (m, rule, eq) = benchmark(GaussParams::new(0.8, 1.5, 0.6, 2.0, 0.3));
    let mut o = VerifyOptions::new(200_000, 5);
    o.welfare_reference = Some((eq.w_r, eq.w_s));
    let d = diagnose(&rule, &m, &o).unwrap();
    assert!(d.pass(), "{:?}", d.failures);
    assert!(d.pooling.is_none());
    assert!(d.reversion.as_ref().is_some_and(|r| !r.applicable));
    assert!(d.sender.best_response_gap < BEST_RESPONSE_TOL);
}

#[test]
fn shifted_intercept_fails_bayes_consistency() {
    let (m, rule, _) = benchmark(GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25));
    let bad = LinearRule { intercept: rule.intercept + 0.1, ..rule };
    let d = diagnose(&bad, &m, &VerifyOptions::new(200_000, 2)).unwrap();
    assert!(!d.pass());
    assert!(d.posterior_mean_gap >= Z_BAND);
    // the sender still best-responds to the wrong rule
    assert!(d.sender.best_response_gap < BEST_RESPONSE_TOL);
}

#[test]
fn step_rule_opens_a_hole_in_the_report_image() {
    let (m, _, _) = benchmark(GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25));
    let step = StepRule { at: 0.0, low: -0.5, high: 0.5 };
    let h = no_holes_check(&step, &m, 0.0, &anchor_grid(&m, 0.0, 2001));
    assert!(!h.pass);
    assert!(h.max_gap > 0.1);
    let (_, rule, _) = benchmark(GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25));
    assert!(no_holes_check(&rule, &m, 0.0, &anchor_grid(&m, 0.0, 2001)).pass);
}

#[test]
fn welfare_estimates_are_reproducible_and_centered() {
    let (m, rule, eq) = benchmark(GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25));
    let a = welfare_mc(&rule, &m, 300_000, 9);
    let b = welfare_mc(&rule, &m, 300_000, 9);
    assert_eq!(a.w_r.mean.to_bits(), b.w_r.mean.to_bits());
    assert_eq!(a.w_s.mean.to_bits(), b.w_s.mean.to_bits());
    assert!(a.w_r.z(eq.w_r) < Z_BAND && a.w_s.z(eq.w_s) < Z_BAND);
    assert!(a.cost.z(eq.cost) < Z_BAND);
    let c = welfare_mc(&rule, &m, 300_000, 10);
    assert_ne!(a.w_r.mean.to_bits(), c.w_r.mean.to_bits());
}

#[test]
fn brute_force_and_first_order_reports_agree() {
    let (m, rule, eq) = benchmark(GaussParams::new(1.5, 0.8, 0.7, 0.6, 0.4));
    for (th, b) in [(0.2, 0.1), (-1.7, 0.9), (2.4, 3.0)] {
        let grid = grid_best_response(&rule, &m, th, b, 4000);
        assert!((grid - eq.report(th, b)).abs() < 1e-6);
    }
    let s = sender_check(&rule, &m, 100, 4);
    assert_eq!(s.soc_violations, 0);
}
