// One line per criterion; exits nonzero if any criterion fails.

use anchortalk::cheap_talk::two_label_threshold_gaussian;
use anchortalk::equilibrium::{cost_floor, separating_rho, solve_bvp, BvpOptions, LinearRule};
use anchortalk::gauss::{self, GaussParams};
use anchortalk::hybrid::{
    compare_formats, r_and_d_profiles, reporting_cost_scaling, HybridOptions, LossBreakdown, Player, PROFILE_NODES,
};
use anchortalk::model::{Anchor, MessageSpace, ModelSpec};
use anchortalk::numerics::Interval;
use anchortalk::sturm::{critical_cost, eigen_first, SlProblem, SL_NODES};
use anchortalk::verify::{bayes_consistency, diagnose, pooling_check, VerifyOptions, POOLING_BAND, Z_BAND};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

type Outcome = Result<(bool, String), String>;

fn c1() -> Outcome {
    let p = GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.0);
    let a = gauss::alpha(&p).map_err(|e| e.to_string())?;
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let mut draw = || 10f64.powf(rng.random_range(-1.0..1.0));
        let q = GaussParams::new(draw(), draw(), draw(), draw(), 0.0);
        let a = gauss::alpha(&q).map_err(|e| e.to_string())?;
        worst = worst.max(gauss::f_identity(&q, a).abs());
    }
    let ok = (a - golden).abs() < 1e-10 && worst < 1e-9;
    Ok((ok, format!("alpha error {:.1e}, max |F| over 1000 draws {worst:.1e}", (a - golden).abs())))
}

fn c2() -> Outcome {
    let alphas: Vec<f64> = (0..=4000).map(|i| i as f64 * 1e-3).collect();
    let f = gauss::pareto_frontier(1.0, 1.0, 0.25, &alphas).map_err(|e| e.to_string())?;
    let r3 = 3f64.sqrt();
    let ok = (f.argmax_grid - r3).abs() < 1e-3 && (f.argmax_foc - r3).abs() < 1e-3;
    Ok((ok, format!("grid argmax {:.4}, first-order root {:.7}", f.argmax_grid, f.argmax_foc)))
}

fn c3() -> Outcome {
    let t = two_label_threshold_gaussian(0.0, 1.0, 0.5).map_err(|e| e.to_string())?;
    let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.5).map_err(|e| e.to_string())?;
    let cmp = compare_formats(&m, 2, &HybridOptions::default()).map_err(|e| e.to_string())?;
    let ok = (t + 1.28).abs() <= 0.01 && cmp.hybrid_dominates();
    let row = |f: &anchortalk::hybrid::FormatLosses| format!("{} {:.4}/{:.4}", f.format, f.loss_r, f.loss_s);
    Ok((
        ok,
        format!(
            "t* = {t:.4}; losses R/S: {}, {}, {}, {}",
            row(&cmp.hybrid),
            row(&cmp.babbling),
            row(&cmp.anchor_only),
            row(&cmp.cheap_talk)
        ),
    ))
}

fn c4() -> Outcome {
    let m = ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, 0.0).map_err(|e| e.to_string())?;
    let prof = r_and_d_profiles(&m, PROFILE_NODES).map_err(|e| e.to_string())?;
    let mut gap = 0f64;
    for (i, &t) in prof.theta.iter().enumerate() {
        gap = gap
            .max((prof.y[i] - 8.0 * t).abs())
            .max((prof.r[i] - 56.0 * t * t / 9.0).abs())
            .max((prof.d[i] - 8.0 * t * t / 9.0).abs())
            .max((prof.d_closed[i] - 8.0 * t * t / 9.0).abs());
    }
    let lb = LossBreakdown::from_profiles(&m, &prof, 1.0, Player::R).map_err(|e| e.to_string())?;
    let diff_gap = (lb.l_h_minus_l_c - 1.0 / 81.0).abs();
    // leading-order excess over a log grid on [1e-4, 1e-2]
    let mut min_leading = f64::INFINITY;
    for k in 0..=20 {
        let d = 10f64.powf(-4.0 + 0.1 * k as f64);
        let b = LossBreakdown::from_profiles(&m, &prof, d, Player::R).map_err(|e| e.to_string())?;
        min_leading = min_leading.min(b.l_h_minus_l_c);
    }
    let tab = reporting_cost_scaling(&m, &[0.01, 0.005, 0.002, 0.001], 400).map_err(|e| e.to_string())?;
    let exact_positive = tab.rows.iter().all(|r| r.excess_r > 0.0 && r.excess_s > 0.0);
    let ok = gap < 1e-8
        && diff_gap < 1e-8
        && min_leading > 0.0
        && exact_positive
        && (tab.cost_slope - 3.0).abs() <= 0.3
        && (tab.mismatch_slope - 1.0).abs() <= 0.3;
    Ok((
        ok,
        format!(
            "profile gap {gap:.1e}, L_H-L_C gap {diff_gap:.1e}, min leading excess {min_leading:.2e}, exact excess positive {exact_positive}, cost slope {:.3}, mismatch slope {:.3}",
            tab.cost_slope, tab.mismatch_slope
        ),
    ))
}

fn c5() -> Outcome {
    let anchor = Anchor::gaussian_affine(0.0, 0.0, 1.0).map_err(|e| e.to_string())?;
    let p = SlProblem::from_anchor(&anchor, SL_NODES).map_err(|e| e.to_string())?;
    let l1 = eigen_first(&p).map_err(|e| e.to_string())?.lambda1;
    let mut ok = (l1 - 1.0).abs() < 1e-3;
    let mut parts = vec![format!("lambda1 {l1:.8}")];
    let sigma_theta = 1.3;
    for s in [0.5, 1.0, 2.0] {
        let m = ModelSpec::gaussian_quadratic(sigma_theta, 0.0, s, 1.0, 0.2).map_err(|e| e.to_string())?;
        let cal = critical_cost(&m, SL_NODES).map_err(|e| e.to_string())?;
        let target = sigma_theta * sigma_theta / (s * s);
        let rel = (cal.c_star / target - 1.0).abs();
        ok &= rel < 0.01;
        parts.push(format!("sigma {s}: c* {:.6} vs {target:.6}", cal.c_star));
    }
    Ok((ok, parts.join("; ")))
}

fn c6() -> Outcome {
    let m = ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, 4.0).map_err(|e| e.to_string())?;
    let fl = cost_floor(&m).map_err(|e| e.to_string())?;
    let mut gaps = Vec::new();
    for c in [1.0, 0.25, 0.0625] {
        gaps.push(separating_rho(&m, c).map_err(|e| e.to_string())?.floor_gap(&fl));
    }
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[1] / w[0]).collect();
    let ok = ratios.iter().all(|r| (r - 0.5).abs() <= 0.1) && fl.fubini_gap() < 1e-8;
    Ok((ok, format!("sup-error ratios {:.3?}, Fubini gap {:.1e}", ratios, fl.fubini_gap())))
}

fn c7() -> Outcome {
    let mut m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.25).map_err(|e| e.to_string())?;
    m.prior = m.prior.restrict(Interval { lo: -8.0, hi: 8.0 }).map_err(|e| e.to_string())?;
    m.message_space = MessageSpace::Compact { lo: -10.0, hi: 10.0 };
    let alpha = gauss::alpha(&GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25)).map_err(|e| e.to_string())?;
    let sol = solve_bvp(&m, &BvpOptions::default()).map_err(|e| e.to_string())?;
    let slope = sol.rule.eval3(0.0).1;
    let resid = sol.telemetry.bayes_residual_max;
    let pool = pooling_check(&sol.rule, &m, 400, 11)
        .map_err(|e| e.to_string())?
        .ok_or("no message bounds")?;
    let ok = (slope / alpha - 1.0).abs() < 0.03
        && resid <= 1e-5
        && pool.lower.z.abs() <= POOLING_BAND
        && pool.upper.z.abs() <= POOLING_BAND;
    Ok((
        ok,
        format!(
            "central slope {slope:.5} vs {alpha:.5}, Bayes residual {resid:.1e}, pooling z {:.2}/{:.2}",
            pool.lower.z, pool.upper.z
        ),
    ))
}

fn c8() -> Outcome {
    let cases = [GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25), GaussParams::new(1.5, 0.8, 0.7, 0.6, 0.4)];
    let mut parts = Vec::new();
    let mut ok = true;
    for p in cases {
        let eq = gauss::equilibrium(p).map_err(|e| e.to_string())?;
        let m = ModelSpec::gaussian_quadratic(p.sigma_theta, p.beta, p.sigma, p.c, p.d).map_err(|e| e.to_string())?;
        let rule = LinearRule { alpha: eq.alpha, intercept: eq.intercept };
        let bad = LinearRule { alpha: 1.1 * eq.alpha, intercept: eq.intercept };
        let (mut passed, mut caught) = (0, 0);
        for seed in 0..20 {
            let mut o = VerifyOptions::new(1_000_000, seed);
            o.welfare_reference = Some((eq.w_r, eq.w_s));
            if diagnose(&rule, &m, &o).map_err(|e| e.to_string())?.pass() {
                passed += 1;
            }
            if bayes_consistency(&bad, &m, 1_000_000, o.bins, seed).max_z >= Z_BAND {
                caught += 1;
            }
        }
        ok &= passed == 20 && caught >= 19;
        parts.push(format!("alpha {:.4}: {passed}/20 pass, controls caught {caught}/20", eq.alpha));
    }
    Ok((ok, parts.join("; ")))
}

fn c9() -> Outcome {
    let rows = gauss::sign_lattice(&[0.3, 0.6, 1.0, 1.5, 2.5, 4.0]).map_err(|e| e.to_string())?;
    let bad: usize = rows.iter().map(|r| r.violations()).sum();
    Ok((bad == 0, format!("{} lattice points, {bad} sign violations", rows.len())))
}

fn main() {
    let criteria: [(fn() -> Outcome, Duration); 9] = [
        (c1, Duration::from_secs(1)),
        (c2, Duration::from_secs(1)),
        (c3, Duration::from_secs(60)),
        (c4, Duration::from_secs(300)),
        (c5, Duration::from_secs(30)),
        (c6, Duration::from_secs(30)),
        (c7, Duration::from_secs(300)),
        (c8, Duration::from_secs(600)),
        (c9, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (run, budget)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = run();
        let took = t0.elapsed();
        let (ok, msg) = match res {
            Ok((ok, msg)) => (ok && took < *budget, msg),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {}: {} ({msg}; {:.2}s of {}s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
