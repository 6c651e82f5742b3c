use anchortalk::cheap_talk::*;
use anchortalk::model::{LinearDensity, ModelSpec, Prior};

fn uniform(d: f64) -> ModelSpec {
    ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, d).unwrap()
}

#[test]
fn uniform_partition_losses_are_sums_of_cubes() {
    for (d, n) in [(0.05, 3), (0.01, 5), (0.001, 20)] {
        let m = uniform(d);
        let p = cs_partition(0.0, 1.0, d, n).unwrap();
        let w = partition_welfare(&m, &p).unwrap();
        let cubes: f64 = p.widths().iter().map(|h| h.powi(3) / 24.0).sum();
        assert!((w.loss_r - cubes).abs() < 1e-13, "{} vs {cubes}", w.loss_r);
        assert!((w.loss_s - cubes - d * d / 2.0).abs() < 1e-13);
    }
}

#[test]
fn label_count_routes_agree() {
    for d in [0.2, 0.05, 0.02, 0.004] {
        let general = max_labels(&uniform(d), 100).unwrap().labels();
        assert_eq!(general, cs_max_labels(1.0, d), "d = {d}");
    }
}

#[test]
fn triangular_prior_partition_satisfies_arbitrage() {
    // f(θ) = 2θ on [0, 1]: cell mean (2/3)(h³ - l³)/(h² - l²)
    let tri = LinearDensity::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
    let mut m = uniform(0.04);
    m.prior = Prior::tabulated(tri).unwrap();
    let mean = |l: f64, h: f64| 2.0 / 3.0 * (h.powi(3) - l.powi(3)) / (h * h - l * l);
    let p = max_labels(&m, 50).unwrap();
    assert!(p.labels() >= 3);
    for k in 0..p.labels() {
        let c = p.cell(k);
        assert!((p.actions[k] - mean(c.lo, c.hi)).abs() < 1e-10);
    }
    for j in 1..p.labels() {
        let mid = 0.5 * (p.actions[j - 1] + p.actions[j]);
        assert!((mid - p.cutoffs[j] - 0.04).abs() < 1e-8, "cutoff {j}");
    }
}

#[test]
fn gaussian_threshold_moves_down_with_bias() {
    let mut prev = f64::INFINITY;
    for d in [0.1, 0.3, 0.5, 0.8] {
        let t = two_label_threshold_gaussian(2.0, 1.5, d).unwrap();
        assert!(t < prev);
        prev = t;
        // the threshold type is indifferent between the two cell means
        let m = ModelSpec::gaussian_quadratic(1.5, 1.0, 1.0, 1.0, d).unwrap();
        let z = (t - 2.0) / 1.5;
        let (lo, hi) = (m.prior.cell_mean(-20.0, z * 1.5), m.prior.cell_mean(z * 1.5, 20.0));
        assert!((0.5 * (lo + hi) + 2.0 - t - d).abs() < 1e-9);
    }
}

#[test]
fn widths_follow_the_profile() {
    let c = width_convergence_check(&uniform(0.1), &[0.01, 0.001]).unwrap();
    assert!(c[1].error < c[0].error);
    assert!(c[1].labels > c[0].labels);
}
