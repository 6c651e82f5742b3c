use anchortalk::model::{Anchor, ModelSpec, Noise};
use anchortalk::numerics::Interval;
use anchortalk::sturm::*;

#[test]
fn gaussian_anchor_eigenvalue_scales_with_inverse_variance() {
    for s in [0.5, 1.0, 2.0] {
        let a = Anchor::gaussian_affine(0.3, 0.0, s).unwrap();
        let e = eigen_first(&SlProblem::from_anchor(&a, SL_NODES).unwrap()).unwrap();
        assert!((e.lambda1 * s * s - 1.0).abs() < 1e-6, "σ = {s}: {}", e.lambda1);
        // second Hermite mode sits one unit above
        assert!((e.gap * s * s - 1.0).abs() < 1e-4);
        assert!(e.monotone);
    }
}

#[test]
fn neumann_laplacian_on_an_interval() {
    let l = 3.0;
    let p = SlProblem::new(Interval { lo: -1.0, hi: -1.0 + l }, 1201, |_| 1.0).unwrap();
    let e = eigen_first(&p).unwrap();
    let want = (std::f64::consts::PI / l).powi(2);
    assert!((e.lambda1 / want - 1.0).abs() < 1e-5);
}

#[test]
fn logistic_eigenvalue_is_below_the_linear_rayleigh_bound() {
    let mut a = Anchor::gaussian_affine(0.0, 0.0, 1.0).unwrap();
    a.noise = Noise::Logistic;
    let e = eigen_first(&SlProblem::from_anchor(&a, SL_NODES).unwrap()).unwrap();
    // v(x) = x gives ∫q / ∫q x² = 3/π²
    let bound = 3.0 / std::f64::consts::PI.powi(2);
    assert!(e.lambda1 > 0.0 && e.lambda1 < bound, "{}", e.lambda1);
}

#[test]
fn critical_cost_for_a_uniform_prior() {
    // Cov(U^R₁, U^S₁) = Var θ = 1/12 and λ₁ = 1/σ²
    for s in [0.5, 1.5] {
        let m = ModelSpec::uniform_quadratic(0.0, 1.0, 0.0, s, 1.0, 0.1).unwrap();
        let cal = critical_cost(&m, SL_NODES).unwrap();
        assert!((cal.a0 - 0.5).abs() < 1e-10);
        assert!((cal.c_star * 12.0 * s * s - 1.0).abs() < 1e-5, "{}", cal.c_star);
    }
}

#[test]
fn linearization_degenerates_at_the_critical_cost() {
    let m = ModelSpec::gaussian_quadratic(1.3, 0.0, 0.8, 1.0, 0.2).unwrap();
    let cal = critical_cost(&m, SL_NODES).unwrap();
    let at = linearized_singular_values(&m, &cal, cal.c_star, SL_NODES).unwrap().0;
    let off = [0.9, 1.1].map(|f| linearized_singular_values(&m, &cal, f * cal.c_star, SL_NODES).unwrap().0);
    assert!(at < 1e-8 * off[0].min(off[1]).max(1.0), "{at} vs {off:?}");
    assert!(off.iter().all(|v| *v > 1e3 * at));
}

#[test]
fn small_sigma_sweep_stays_on_the_knife_edge() {
    let rows = small_sigma_sweep(1.0, 0.2, &[1.0, 0.5, 0.25]).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].posterior_var < w[0].posterior_var);
    }
    for r in &rows {
        assert!((r.c * r.sigma * r.sigma - 1.0).abs() < 1e-12);
    }
}
