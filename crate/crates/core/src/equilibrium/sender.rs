use super::rule::ActionFn;
use crate::model::{rule_on, ModelSpec};
use crate::numerics::{expand_bracket, find_root, Interval};
use crate::Result;

/// Marginal payoff of raising the report: U^S₁(a(r), θ) a'(r) - c φ'(r - b).
pub fn report_gradient(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, b: f64, r: f64) -> f64 {
    m.sender().d1(rule.value(r), theta) * rule.slope(r) - m.cost.c * m.cost.shape.dphi(r - b)
}

/// Sender's optimal report from the first-order condition, assuming a
/// strictly concave objective. Corner reports are returned when the gradient
/// points outward at an end of the message interval.
pub fn best_response(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, b: f64) -> f64 {
    let g = |r: f64| report_gradient(rule, m, theta, b, r);
    let dom = rule.domain().or(m.message_space.interval());
    match dom {
        Some(iv) => {
            if g(iv.lo) <= 0.0 {
                return iv.lo;
            }
            if g(iv.hi) >= 0.0 {
                return iv.hi;
            }
            find_root(g, iv, 1e-12).unwrap_or(iv.clamp(b))
        }
        None => {
            let lim = Interval { lo: b - 1e6, hi: b + 1e6 };
            expand_bracket(g, b, 1.0, lim).and_then(|br| find_root(g, br, 1e-12)).unwrap_or(b)
        }
    }
}

/// Expected report-anchor cost E[c φ(R(θ, b) - b)] by nested quadrature over
/// the prior and the anchor noise.
pub fn communication_cost(rule: &dyn ActionFn, m: &ModelSpec) -> Result<f64> {
    let outer = m.prior.rule(m.prior.natural_scale());
    let (xlo, xhi) = m.anchor.noise.tail_bound();
    let inner = rule_on(Interval::new(xlo, xhi)?, m.anchor.noise.scale(), None);
    let mut total = 0.0;
    for (&th, &wt) in outer.x.iter().zip(&outer.w) {
        let f = m.prior.density(th);
        if f == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (&x, &wx) in inner.x.iter().zip(&inner.w) {
            let b = m.anchor.mean(th) + m.anchor.sigma * x;
            let r = best_response(rule, m, th, b);
            acc += wx * m.anchor.noise.pdf(x) * m.cost.value(r - b);
        }
        total += wt * f * acc;
    }
    Ok(total)
}
