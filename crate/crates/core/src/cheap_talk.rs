//! Pure cheap-talk partition equilibria: the uniform-quadratic closed form,
//! forward shooting for general priors and losses, the two-label Gaussian
//! threshold, partition welfare, and the small-bias width profile Y.

use crate::model::{rule_on, ModelSpec, Payoff, Prior};
use crate::numerics::{find_root, normal_cdf, normal_pdf, normal_sf, rk4_step, GaussLegendre, Interval};
use crate::{Error, Result};
use serde::Serialize;

/// Cutoffs θ₀ < θ₁ < … < θ_N with the receiver action in each cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub cutoffs: Vec<f64>,
    pub actions: Vec<f64>,
}

impl Partition {
    pub fn labels(&self) -> usize {
        self.actions.len()
    }

    pub fn cell(&self, k: usize) -> Interval {
        Interval { lo: self.cutoffs[k], hi: self.cutoffs[k + 1] }
    }

    /// Left cell width at interior cutoff j (1-based, as θ_j − θ_{j−1}).
    pub fn widths(&self) -> Vec<f64> {
        self.cutoffs.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn label_of(&self, theta: f64) -> usize {
        let n = self.labels();
        self.cutoffs[1..n].partition_point(|&c| c <= theta)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("cutoff_index,theta\n");
        for (j, t) in self.cutoffs.iter().enumerate() {
            s.push_str(&format!("{j},{t}\n"));
        }
        s
    }
}

/// Uniform-quadratic closed form on `[lo, hi]`:
/// θ_j = lo + w (j/N + 2 (d/w) j (j − N)). Feasible iff 2(d/w)N(N−1) < 1.
pub fn cs_partition(lo: f64, hi: f64, d: f64, n: usize) -> Result<Partition> {
    let iv = Interval::new(lo, hi)?;
    if n == 0 {
        return Err(Error::InfeasiblePartition { n, reason: "need at least one label".into() });
    }
    let w = iv.width();
    let dd = d / w;
    let nf = n as f64;
    if !(2.0 * dd * nf * (nf - 1.0) < 1.0) {
        return Err(Error::InfeasiblePartition { n, reason: format!("2dN(N-1) = {} >= 1", 2.0 * dd * nf * (nf - 1.0)) });
    }
    let mut cutoffs: Vec<f64> = (0..=n)
        .map(|j| {
            let j = j as f64;
            lo + w * (j / nf + 2.0 * dd * j * (j - nf))
        })
        .collect();
    cutoffs[n] = hi;
    let actions = cutoffs.windows(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    Ok(Partition { cutoffs, actions })
}

/// Largest N with 2dN(N−1) < 1 on a unit-width interval (scaled by width).
pub fn cs_max_labels(width: f64, d: f64) -> usize {
    if d <= 0.0 {
        return usize::MAX;
    }
    let dd = d / width;
    let mut n = 1usize;
    while 2.0 * dd * ((n + 1) as f64) * (n as f64) < 1.0 {
        n += 1;
    }
    n
}

/// Receiver's best action on `[lo, hi]` under the prior.
pub fn cell_action(m: &ModelSpec, prior: &Prior, lo: f64, hi: f64) -> Result<f64> {
    let r = m.receiver();
    if hi - lo <= 1e-14 * (1.0 + lo.abs()) {
        return r.ideal(0.5 * (lo + hi));
    }
    if let Payoff::Loss { loss: crate::model::Loss::Quadratic { .. }, delta_hat, bias } = r {
        let mean = prior.cell_mean(lo, hi);
        return Ok(match delta_hat {
            crate::model::DeltaHat::Constant(v) => mean + bias * v,
            _ => {
                let rule = cell_rule(prior, lo, hi);
                let mass = rule.integrate(|t| prior.density(t));
                mean + rule.integrate(|t| r.shift(t) * prior.density(t)) / mass
            }
        });
    }
    let rule = cell_rule(prior, lo, hi);
    let foc = |a: f64| rule.integrate(|t| r.d1(a, t) * prior.density(t));
    let (alo, ahi) = (r.ideal(lo)?, r.ideal(hi)?);
    let pad = 1e-9 * (1.0 + alo.abs().max(ahi.abs()));
    find_root(foc, Interval { lo: alo.min(ahi) - pad, hi: alo.max(ahi) + pad }, 1e-14)
}

fn cell_rule(prior: &Prior, lo: f64, hi: f64) -> crate::numerics::QuadRule {
    let iv = Interval { lo, hi };
    rule_on(iv, iv.width().min(prior.natural_scale()), None)
}

/// Action `a' > a` with U^S(a', θ) = U^S(a, θ).
fn mirror_action(s: &Payoff, theta: f64, a_left: f64) -> Result<Option<f64>> {
    let ideal = s.ideal(theta)?;
    if a_left >= ideal {
        return Ok(None);
    }
    if let Payoff::Loss { .. } = s {
        return Ok(Some(2.0 * ideal - a_left));
    }
    let target = s.value(a_left, theta);
    let g = |a: f64| s.value(a, theta) - target;
    let mut hi = ideal + (ideal - a_left);
    let mut k = 0;
    while g(hi) > 0.0 {
        hi = ideal + 2.0 * (hi - ideal);
        k += 1;
        if k > 60 {
            return Ok(None);
        }
    }
    Ok(Some(find_root(g, Interval { lo: ideal, hi }, 1e-14)?))
}

enum Shot {
    /// Chain finished; last cutoff.
    Done(Vec<f64>),
    /// Chain ran past the top of the support.
    Over,
}

fn shoot(m: &ModelSpec, n: usize, theta1: f64) -> Result<Shot> {
    let sup = m.prior.support();
    let mut cut = vec![sup.lo, theta1];
    for j in 1..n {
        let lo = cut[j - 1];
        let tj = cut[j];
        let a_left = cell_action(m, &m.prior, lo, tj)?;
        let target = match mirror_action(m.sender(), tj, a_left)? {
            Some(t) => t,
            None => return Ok(Shot::Over),
        };
        let top = cell_action(m, &m.prior, tj, sup.hi)?;
        if target >= top {
            return Ok(Shot::Over);
        }
        let bottom = m.receiver().ideal(tj)?;
        let next = if target <= bottom {
            tj
        } else {
            find_root(|t| cell_action(m, &m.prior, tj, t).unwrap_or(f64::NAN) - target, Interval { lo: tj, hi: sup.hi }, 1e-15)?
        };
        cut.push(next);
    }
    Ok(Shot::Done(cut))
}

/// N-label partition by forward shooting on θ₁ with cell actions from the
/// exact cell FOC and boundary indifference of the sender.
pub fn solve_partition_general(m: &ModelSpec, n: usize) -> Result<Partition> {
    let sup = m.prior.support();
    if n == 0 {
        return Err(Error::InfeasiblePartition { n, reason: "need at least one label".into() });
    }
    if n == 1 {
        let a = cell_action(m, &m.prior, sup.lo, sup.hi)?;
        return Ok(Partition { cutoffs: vec![sup.lo, sup.hi], actions: vec![a] });
    }
    // residual sign: Over or last cutoff above the top means θ₁ too large
    let below = |t1: f64| -> Result<Option<Vec<f64>>> {
        match shoot(m, n, t1)? {
            Shot::Done(c) if *c.last().unwrap() <= sup.hi => Ok(Some(c)),
            _ => Ok(None),
        }
    };
    let mut lo = sup.lo + 1e-13 * sup.width();
    let mut hi = sup.hi;
    let mut best = match below(lo)? {
        Some(c) => c,
        None => {
            return Err(Error::InfeasiblePartition { n, reason: "chain overshoots even with a vanishing first cell".into() })
        }
    };
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match below(mid)? {
            Some(c) => {
                lo = mid;
                best = c;
            }
            None => hi = mid,
        }
    }
    // the last cutoff is judged in payoff terms: in thin tails the cell
    // action is flat in its upper end, so a θ-gap says nothing
    best[n] = sup.hi;
    let actions = (0..n).map(|k| cell_action(m, &m.prior, best[k], best[k + 1])).collect::<Result<Vec<_>>>()?;
    let resid = indifference_residuals(m, &Partition { cutoffs: best.clone(), actions: actions.clone() });
    let worst = resid.iter().copied().fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(Error::InfeasiblePartition { n, reason: format!("boundary indifference fails by {worst:.3e}") });
    }
    let p = Partition { cutoffs: best, actions };
    if p.actions.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InfeasiblePartition { n, reason: "cell actions not increasing".into() });
    }
    Ok(p)
}

/// Largest feasible label count for the general solver, probing upward.
pub fn max_labels(m: &ModelSpec, cap: usize) -> Result<Partition> {
    let mut best = solve_partition_general(m, 1)?;
    for n in 2..=cap {
        match solve_partition_general(m, n) {
            Ok(p) => best = p,
            Err(Error::InfeasiblePartition { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

/// Sender payoff gap |U^S(a_{j+1}, θ_j) − U^S(a_j, θ_j)| at each interior cutoff.
pub fn indifference_residuals(m: &ModelSpec, p: &Partition) -> Vec<f64> {
    (1..p.labels())
        .map(|j| {
            let t = p.cutoffs[j];
            (m.sender().value(p.actions[j], t) - m.sender().value(p.actions[j - 1], t)).abs()
        })
        .collect()
}

/// Threshold of the two-label equilibrium under a N(mean, sd²) prior:
/// t + d = ½(E[θ | θ < t] + E[θ | θ > t]) in standardized units.
pub fn two_label_threshold_gaussian(mean: f64, sd: f64, d: f64) -> Result<f64> {
    let dz = d / sd;
    let g = |t: f64| {
        let (f, lo, hi) = (normal_pdf(t), normal_cdf(t), normal_sf(t));
        t + dz - 0.5 * (-f / lo + f / hi)
    };
    let lim = Interval { lo: -crate::numerics::GAUSS_TRUNCATION, hi: crate::numerics::GAUSS_TRUNCATION };
    match find_root(g, lim, 1e-14) {
        Ok(t) => Ok(mean + sd * t),
        Err(Error::NoSignChange { .. }) => {
            Err(Error::OnlyBabbling(format!("no two-label threshold within ±8 sd at d = {d}")))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionWelfare {
    pub w_r: f64,
    pub w_s: f64,
    /// Losses relative to each player's ideal action state by state.
    pub loss_r: f64,
    pub loss_s: f64,
}

/// Expected payoffs of both players under a partition.
pub fn partition_welfare(m: &ModelSpec, p: &Partition) -> Result<PartitionWelfare> {
    let (mut w_r, mut w_s, mut fb_r, mut fb_s) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..p.labels() {
        let cell = p.cell(k);
        if cell.hi <= cell.lo {
            continue;
        }
        let rule = cell_rule(&m.prior, cell.lo, cell.hi);
        let a = p.actions[k];
        for (&t, &w) in rule.x.iter().zip(&rule.w) {
            let f = m.prior.density(t) * w;
            w_r += f * m.receiver().value(a, t);
            w_s += f * m.sender().value(a, t);
            fb_r += f * m.receiver().value(m.receiver().ideal(t)?, t);
            fb_s += f * m.sender().value(m.sender().ideal(t)?, t);
        }
    }
    Ok(PartitionWelfare { w_r, w_s, loss_r: fb_r - w_r, loss_s: fb_s - w_s })
}

/// Width profile Y on a grid, computed twice: from the density,
/// Y(θ) = 8 f(θ)^(-2/3) ∫ δ̂ f^(2/3), and by RK4 on Y' = 8δ̂ − (2/3) s Y.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YProfile {
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
    pub y_rk4: Vec<f64>,
    pub max_gap: f64,
}

impl YProfile {
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.theta.partition_point(|&x| x <= t).clamp(1, self.theta.len() - 1);
        let (x0, x1) = (self.theta[i - 1], self.theta[i]);
        let u = ((t - x0) / (x1 - x0)).clamp(0.0, 1.0);
        self.y[i - 1] * (1.0 - u) + self.y[i] * u
    }
}

pub fn y_profile(m: &ModelSpec, nodes: usize) -> Result<YProfile> {
    let sup = m.prior.support();
    let dh = m.sender().delta_hat().cloned().unwrap_or_default();
    let theta = crate::numerics::Grid::uniform(sup, nodes).nodes;
    let gl = GaussLegendre::new(20);
    let mut y = vec![0.0; nodes];
    let mut acc = 0.0;
    let f23 = |t: f64| m.prior.density(t).powf(2.0 / 3.0);
    for i in 1..nodes {
        let rule = gl.composite(Interval { lo: theta[i - 1], hi: theta[i] }, 1);
        acc += rule.integrate(|t| dh.value(t) * f23(t));
        y[i] = 8.0 * acc / f23(theta[i]);
    }
    let mut y_rk4 = vec![0.0; nodes];
    let mut rhs = |t: f64, v: &[f64; 1]| [8.0 * dh.value(t) - 2.0 / 3.0 * m.prior.score(t) * v[0]];
    let sub = 16;
    let mut state = [0.0];
    for i in 1..nodes {
        let h = (theta[i] - theta[i - 1]) / sub as f64;
        for k in 0..sub {
            state = rk4_step(&mut rhs, theta[i - 1] + h * k as f64, &state, h);
        }
        y_rk4[i] = state[0];
    }
    let max_gap = y.iter().zip(&y_rk4).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(YProfile { theta, y, y_rk4, max_gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthCheck {
    pub d: f64,
    pub labels: usize,
    /// max_j |h_j² − d Y(θ_j)| / d over interior cutoffs.
    pub error: f64,
}

/// Most informative partitions along a sequence of biases, compared with the
/// width profile h² ≈ dY.
pub fn width_convergence_check(m: &ModelSpec, ds: &[f64]) -> Result<Vec<WidthCheck>> {
    let yp = y_profile(m, 4001)?;
    let sup = m.prior.support();
    let closed = matches!(m.prior.kind(), crate::model::PriorKind::Uniform)
        && m.receiver().loss() == Some(crate::model::Loss::Quadratic { kappa: m.receiver().kappa().unwrap_or(1.0) })
        && m.sender().loss().is_some()
        && matches!(m.sender().delta_hat(), Some(crate::model::DeltaHat::Constant(v)) if *v == 1.0);
    ds.iter()
        .map(|&d| {
            let md = ModelSpec { payoffs: crate::model::Payoffs { receiver: m.receiver().clone(), sender: m.sender().with_bias(d) }, ..m.clone() };
            let p = if closed {
                cs_partition(sup.lo, sup.hi, d, cs_max_labels(sup.width(), d))?
            } else {
                max_labels(&md, 400)?
            };
            let error = (1..p.labels())
                .map(|j| {
                    let h = p.cutoffs[j] - p.cutoffs[j - 1];
                    (h * h - d * yp.eval(p.cutoffs[j])).abs() / d
                })
                .fold(0.0, f64::max);
            Ok(WidthCheck { d, labels: p.labels(), error })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DeltaHat, Payoffs};

    fn uniform(d: f64) -> ModelSpec {
        ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, d).unwrap()
    }

    #[test]
    fn closed_form_three_labels() {
        let p = cs_partition(0.0, 1.0, 0.05, 3).unwrap();
        let want = [0.0, 0.133_333_333_333_333_3, 0.466_666_666_666_666_7, 1.0];
        for (a, b) in p.cutoffs.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_feasibility_bound() {
        assert!(cs_partition(0.0, 1.0, 0.05, 3).is_ok());
        assert!(cs_partition(0.0, 1.0, 0.1, 3).is_err());
    }

    #[test]
    fn general_solver_matches_closed_form() {
        for (d, n) in [(0.05, 3), (0.01, 7), (0.002, 15)] {
            let g = solve_partition_general(&uniform(d), n).unwrap();
            let c = cs_partition(0.0, 1.0, d, n).unwrap();
            for (a, b) in g.cutoffs.iter().zip(&c.cutoffs) {
                assert!((a - b).abs() < 1e-9, "d = {d}, n = {n}: {a} vs {b}");
            }
            assert!(indifference_residuals(&uniform(d), &g).iter().all(|r| *r < 1e-8));
        }
    }

    #[test]
    fn general_solver_flags_infeasible() {
        let r = solve_partition_general(&uniform(0.05), 4);
        assert!(matches!(r, Err(Error::InfeasiblePartition { .. })));
    }

    #[test]
    fn gaussian_two_labels() {
        let t = two_label_threshold_gaussian(0.0, 1.0, 0.5).unwrap();
        assert!((t + 1.28).abs() < 0.01, "{t}");
        let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        let p = solve_partition_general(&m, 2).unwrap();
        assert!((p.cutoffs[1] - t).abs() < 1e-8);
        assert!(matches!(two_label_threshold_gaussian(0.0, 1.0, 6.0), Err(Error::OnlyBabbling(_))));
    }

    #[test]
    fn babbling_welfare_uniform() {
        let m = uniform(0.1);
        let p = solve_partition_general(&m, 1).unwrap();
        let w = partition_welfare(&m, &p).unwrap();
        assert!((w.w_r + 1.0 / 24.0).abs() < 1e-14);
        assert!((w.w_s + 1.0 / 24.0 + 0.005).abs() < 1e-14);
    }

    #[test]
    fn y_is_linear_for_uniform() {
        let y = y_profile(&uniform(0.1), 101).unwrap();
        for (t, v) in y.theta.iter().zip(&y.y) {
            assert!((v - 8.0 * t).abs() < 1e-12);
        }
        assert!(y.max_gap < 1e-12);
    }

    #[test]
    fn y_routes_agree_for_gaussian_and_varying_bias() {
        let mut m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.1).unwrap();
        m.prior = m.prior.restrict(Interval::new(-3.0, 3.0).unwrap()).unwrap();
        m.payoffs = Payoffs {
            receiver: m.receiver().clone(),
            sender: Payoff::quadratic_biased(1.0, 0.1, DeltaHat::Affine { intercept: 1.0, slope: 0.2 }),
        };
        let y = y_profile(&m, 601).unwrap();
        assert!(y.max_gap < 1e-8, "{}", y.max_gap);
    }

    #[test]
    fn widths_approach_profile() {
        let c = width_convergence_check(&uniform(0.1), &[0.02, 0.005, 0.00125]).unwrap();
        assert!(c[0].error > c[1].error && c[1].error > c[2].error, "{c:?}");
    }

    #[test]
    fn max_labels_loss_near_d_over_six() {
        for d in [1e-3, 2.5e-4] {
            let p = cs_partition(0.0, 1.0, d, cs_max_labels(1.0, d)).unwrap();
            let w = partition_welfare(&uniform(d), &p).unwrap();
            assert!((w.loss_r / (d / 6.0) - 1.0).abs() < 0.1, "d = {d}: {}", w.loss_r);
        }
    }
}
