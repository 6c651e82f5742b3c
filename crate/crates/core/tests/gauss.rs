use anchortalk::gauss::{self, GaussParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const CASES: [(f64, f64, f64, f64, f64); 4] =
    [(1.0, 1.0, 1.0, 1.0, 0.25), (1.5, 0.8, 0.7, 0.6, 0.4), (0.4, 2.0, 1.3, 3.0, 0.1), (2.0, 0.3, 0.5, 0.2, 1.0)];

// Report is linear in (θ, x) with x the standardized anchor noise; returns
// (coefficient on θ, coefficient on x, constant).
fn report_coefficients(eq: &gauss::LinearEquilibrium) -> (f64, f64, f64) {
    let p = eq.params;
    let r = |th: f64, x: f64| eq.report(th, p.beta * th + p.sigma * x);
    let k0 = r(0.0, 0.0);
    (r(1.0, 0.0) - k0, r(0.0, 1.0) - k0, k0)
}

#[test]
fn equilibrium_is_a_mutual_best_response() {
    for (st, b, s, c, d) in CASES {
        let p = GaussParams::new(st, b, s, c, d);
        let eq = gauss::equilibrium(p).unwrap();
        // sender: argmin (αr + i - θ - d)²/2 + c(r - b)²/2
        for (th, anchor) in [(0.3, -1.0), (-2.0, 0.5), (1.1, 1.7)] {
            let direct = (eq.alpha * (th + d - eq.intercept) + c * anchor) / (eq.alpha * eq.alpha + c);
            assert!((eq.report(th, anchor) - direct).abs() < 1e-12);
        }
        // receiver: linear projection of θ on the report
        let (kt, kx, k0) = report_coefficients(&eq);
        let cov = kt * st * st;
        let var_r = kt * kt * st * st + kx * kx;
        assert!((cov / var_r - eq.alpha).abs() < 1e-12, "{p:?}");
        assert!((eq.intercept + eq.alpha * k0).abs() < 1e-12);
        assert!((eq.posterior_var - (st * st - cov * cov / var_r)).abs() < 1e-12);
        assert!((eq.w_r + 0.5 * eq.posterior_var).abs() < 1e-14);
        assert!((eq.w_s - eq.w_s_decomposed()).abs() < 1e-12);
        assert!((eq.inflation - k0).abs() < 1e-12);
    }
}

#[test]
fn welfare_matches_simulation() {
    let p = GaussParams::new(1.5, 0.8, 0.7, 0.6, 0.4);
    let eq = gauss::equilibrium(p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 400_000;
    let (mut ws, mut ws2, mut cost) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let th = p.sigma_theta * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        let x: f64 = StandardNormal.sample(&mut rng);
        let b = p.beta * th + p.sigma * x;
        let r = eq.report(th, b);
        let a = eq.action(r);
        let k = 0.5 * p.c * (r - b) * (r - b);
        let u = -0.5 * (a - th - p.d).powi(2) - k;
        ws += u;
        ws2 += u * u;
        cost += k;
    }
    let nf = n as f64;
    let mean = ws / nf;
    let se = ((ws2 / nf - mean * mean) / nf).sqrt();
    assert!((mean - eq.w_s).abs() < 4.0 * se, "{mean} vs {} (se {se})", eq.w_s);
    assert!((cost / nf - eq.cost).abs() < 0.02 * eq.cost);
}

#[test]
fn root_solves_the_quadratic_by_bisection() {
    for (st, b, s, c, d) in CASES {
        let p = GaussParams::new(st, b, s, c, d);
        let f = |a: f64| gauss::f_identity(&p, a);
        let (mut lo, mut hi) = (0.0, 1.0 / b);
        // F(0) = cβσ_θ² > 0 and F(1/β) < 0
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((gauss::alpha(&p).unwrap() - lo).abs() < 1e-12 * (1.0 + lo));
    }
}

#[test]
fn uninformative_anchor_off_the_knife_edge_babbles() {
    let eq = gauss::equilibrium(GaussParams::new(1.0, 0.0, 1.0, 2.0, 0.3)).unwrap();
    assert!(eq.is_babbling());
    assert!((eq.posterior_var - 1.0).abs() < 1e-15);
    assert!(gauss::equilibrium(GaussParams::new(1.0, 0.0, 1.0, 1.0, 0.3)).is_err());
}

#[test]
fn knife_edge_slopes_are_all_self_consistent() {
    for alpha in [0.2, 1.0, 3.0] {
        let eq = gauss::uninformative_family(1.2, 2.0, alpha, 0.3).unwrap();
        let (kt, kx, _) = report_coefficients(&eq);
        let st2 = 1.2 * 1.2;
        assert!((kt * st2 / (kt * kt * st2 + kx * kx) - alpha).abs() < 1e-12);
    }
}

#[test]
fn comparative_statics_match_finite_differences() {
    for (st, b, s, c, d) in CASES {
        let p = GaussParams::new(st, b, s, c, d);
        let an = gauss::derivatives(&p).unwrap();
        let h = 1e-6;
        let at = |q: GaussParams| gauss::equilibrium(q).unwrap();
        let fd = |f: &dyn Fn(f64) -> GaussParams, g: &dyn Fn(&gauss::LinearEquilibrium) -> f64, x: f64| {
            (g(&at(f(x + h))) - g(&at(f(x - h)))) / (2.0 * h)
        };
        let alpha = |e: &gauss::LinearEquilibrium| e.alpha;
        let ws = |e: &gauss::LinearEquilibrium| e.w_s;
        let in_c = |x: f64| GaussParams::new(st, b, s, x, d);
        let in_s = |x: f64| GaussParams::new(st, b, x, c, d);
        for (a, n) in [
            (an.dalpha_dc, fd(&in_c, &alpha, c)),
            (an.dalpha_dsigma, fd(&in_s, &alpha, s)),
            (an.dws_dc, fd(&in_c, &ws, c)),
            (an.dws_dsigma, fd(&in_s, &ws, s)),
        ] {
            assert!((a - n).abs() < 1e-6 * (1.0 + a.abs()), "{p:?}: {a} vs {n}");
        }
    }
}

#[test]
fn sender_welfare_regimes_switch_at_the_thresholds() {
    let base = GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.0);
    let (lo, hi) = gauss::thresholds(&base).unwrap();
    assert!(0.0 < lo && lo < hi);
    // the closed-form derivatives change sign exactly at the thresholds
    let at = |d: f64| gauss::derivatives(&GaussParams { d, ..base }).unwrap();
    assert!(at(0.99 * lo).dws_dc < 0.0 && at(1.01 * lo).dws_dc > 0.0);
    assert!(at(0.99 * hi).dws_dsigma < 0.0 && at(1.01 * hi).dws_dsigma > 0.0);
    assert!(at(lo).dws_dc.abs() < 1e-12 && at(hi).dws_dsigma.abs() < 1e-12);
    let rows = gauss::sign_lattice(&[0.5, 1.0, 2.0]).unwrap();
    assert_eq!(rows.len(), 81);
    assert_eq!(rows.iter().map(|r| r.violations()).sum::<usize>(), 0);
}

#[test]
fn frontier_maximizer_three_ways() {
    let alphas: Vec<f64> = (0..=4000).map(|i| i as f64 * 1e-3).collect();
    for (st, c, d) in [(1.0, 1.0, 0.25), (2.0, 0.5, 0.1)] {
        let f = gauss::pareto_frontier(st, c, d, &alphas).unwrap();
        assert!((f.argmax_foc - f.argmax_closed).abs() < 1e-9);
        assert!((f.argmax_grid - f.argmax_closed).abs() <= 1e-3);
    }
    // past c σ_θ / d = c the interior optimum disappears
    let f = gauss::pareto_frontier(1.0, 1.0, 2.0, &alphas).unwrap();
    assert_eq!(f.argmax_foc, 0.0);
    assert_eq!(f.argmax_grid, 0.0);
}
