use anchortalk::equilibrium::*;
use anchortalk::gauss::{self, GaussParams};
use anchortalk::model::{MessageSpace, ModelSpec};
use anchortalk::numerics::Interval;
use anchortalk::sturm::babbling_action;
use anchortalk::Error;

#[test]
fn whole_line_gaussian_recovers_the_affine_rule() {
    let p = GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25);
    let eq = gauss::equilibrium(p).unwrap();
    let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.25).unwrap();
    let sol = solve_whole_line(&m, &[6.0, 8.0], &BvpOptions::default()).unwrap();
    for r in [-3.0, -1.5, 0.0, 1.5, 3.0] {
        let (a, slope, _) = sol.rule.eval3(r);
        assert!((a - eq.action(r)).abs() < 1e-3, "a({r}) = {a} vs {}", eq.action(r));
        assert!((slope / eq.alpha - 1.0).abs() < 0.01, "a'({r}) = {slope}");
    }
    assert!(sol.steps.last().unwrap().central_change < 1e-3);
}

#[test]
fn compact_solution_is_consistent_and_monotone() {
    let mut m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 2.0, 0.1).unwrap();
    m.prior = m.prior.restrict(Interval { lo: -8.0, hi: 8.0 }).unwrap();
    m.message_space = MessageSpace::Compact { lo: -9.0, hi: 9.0 };
    let alpha = gauss::alpha(&GaussParams::new(1.0, 1.0, 1.0, 2.0, 0.1)).unwrap();
    let sol = solve_bvp(&m, &BvpOptions::default()).unwrap();
    assert!(sol.telemetry.bayes_residual_max <= 1e-5);
    assert!(sol.telemetry.min_slope > 0.0);
    assert!((sol.rule.eval3(0.0).1 / alpha - 1.0).abs() < 0.03);
}

#[test]
fn message_bounds_inside_the_prior_mass_have_no_regular_solution() {
    let mut m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.25).unwrap();
    m.message_space = MessageSpace::Compact { lo: -0.2, hi: 0.2 };
    assert!(matches!(solve_bvp(&m, &BvpOptions::default()), Err(Error::NoRegularEquilibrium(_))));
}

#[test]
fn uninformative_anchor_babbles_at_the_prior_mean() {
    let m = ModelSpec::gaussian_quadratic(1.4, 0.0, 1.0, 0.5, 0.2).unwrap();
    assert!(babbling_action(&m).unwrap().abs() < 1e-10);
    let eq = gauss::equilibrium(GaussParams::new(1.4, 0.0, 1.0, 0.5, 0.2)).unwrap();
    assert!(eq.is_babbling());
    // a flat rule leaves nothing to gain from distorting
    let flat = LinearRule { alpha: 0.0, intercept: 0.0 };
    assert!(communication_cost(&flat, &m).unwrap().abs() < 1e-14);
}

#[test]
fn sender_side_matches_the_closed_form() {
    for p in [GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25), GaussParams::new(1.5, 0.8, 0.7, 0.6, 0.4)] {
        let eq = gauss::equilibrium(p).unwrap();
        let m = ModelSpec::gaussian_quadratic(p.sigma_theta, p.beta, p.sigma, p.c, p.d).unwrap();
        let rule = LinearRule { alpha: eq.alpha, intercept: eq.intercept };
        for (th, b) in [(0.0, 0.0), (1.3, -0.4), (-2.0, 2.5)] {
            assert!((best_response(&rule, &m, th, b) - eq.report(th, b)).abs() < 1e-9);
            let r = eq.report(th, b);
            assert!(report_gradient(&rule, &m, th, b, r).abs() < 1e-10);
        }
        let cost = communication_cost(&rule, &m).unwrap();
        assert!((cost / eq.cost - 1.0).abs() < 1e-6, "{cost} vs {}", eq.cost);
    }
}

#[test]
fn uniform_floor_is_linear_in_the_state() {
    // T ≡ d, so Γ(θ) = dθ, E[Γ] = d/2 on [0, 1]
    let d = 0.3;
    let m = ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, d).unwrap();
    let fl = cost_floor(&m).unwrap();
    assert!((fl.expected_gamma - d / 2.0).abs() < 1e-10);
    assert!((fl.tail_integral - d / 2.0).abs() < 1e-10);
    for th in [0.1, 0.5, 0.9] {
        assert!((fl.gamma.eval(th) - d * th).abs() < 1e-9);
    }
}

#[test]
fn separating_cost_approaches_the_floor_from_below_as_c_falls() {
    let m = ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap();
    let fl = cost_floor(&m).unwrap();
    let gaps: Vec<f64> = [1.0, 0.25, 0.0625, 1.0 / 256.0]
        .iter()
        .map(|&c| separating_rho(&m, c).unwrap().floor_gap(&fl))
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps.iter().all(|g| *g > 0.0));
}

#[test]
fn negative_bias_has_no_separating_path() {
    let m = ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, -0.5).unwrap();
    assert!(matches!(separating_rho(&m, 1.0), Err(Error::AssumptionViolation(_))));
}
