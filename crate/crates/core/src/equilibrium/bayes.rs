use super::rule::{ActionFn, ActionRule};
use crate::model::ModelSpec;
use crate::numerics::{GaussLegendre, Interval, QuadRule, SampledFunction};
use crate::{Error, Result};

/// Log-weights below the running maximum by more than this are dropped.
const LOG_CUTOFF: f64 = 60.0;
/// A below this fraction of ∫|U^R₁ ψ'/c U^S₁| w flags a stiff point.
const STIFF_FLOOR: f64 = 1e-8;
/// Posterior-likelihood mass with a nonpositive inverse-anchor Jacobian that
/// is tolerated as far-tail noise before a report counts as irregular.
const IRREGULAR_MASS: f64 = 1e-10;

/// Anchor that makes report `r` optimal at θ under action value `a` and
/// slope `p`: `r - ψ(U^S₁(a, θ) p / c)`.
pub fn inverse_anchor(r: f64, theta: f64, a: f64, p: f64, m: &ModelSpec) -> Result<f64> {
    let s = m.sender().d1(a, theta) * p / m.cost.c;
    let u = m.cost.shape.psi(s);
    if !u.is_finite() {
        return Err(Error::NoInducingAnchor { r, theta });
    }
    Ok(r - u)
}

/// Curvature coefficients of the Bayes equation at one point, normalized by
/// the anchor-likelihood mass ∫ f q so they are comparable across reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    /// ∫|U^R₁ ψ'/c U^S₁| f q / ∫ f q, the scale against which `a` is judged.
    pub a_scale: f64,
}

impl Coefficients {
    pub fn stiff(&self) -> bool {
        !(self.a > STIFF_FLOOR * self.a_scale)
    }

    pub fn rhs(&self) -> f64 {
        self.b / self.a
    }
}

/// Report-side quantities shared by the ODE, boundary equations and
/// posterior: integrals over θ of prior times anchor likelihood.
pub struct Kernel<'a> {
    m: &'a ModelSpec,
    support: Interval,
    prior_scale: f64,
    gl: GaussLegendre,
}

impl<'a> Kernel<'a> {
    pub fn new(m: &'a ModelSpec) -> Self {
        Kernel { m, support: m.prior.support(), prior_scale: m.prior.natural_scale(), gl: GaussLegendre::new(10) }
    }

    pub fn model(&self) -> &ModelSpec {
        self.m
    }

    /// Width in θ over which the anchor likelihood at slope `p` varies.
    fn theta_scale(&self, a: f64, p: f64) -> f64 {
        let m = self.m;
        let th = m.prior.mean();
        let tilt = m.anchor.b0.derivative(th).abs()
            + m.cost.shape.dpsi(0.0) * m.sender().d12(a, th).abs() * p.abs() / m.cost.c;
        let w = m.anchor.sigma * m.anchor.noise.scale() / tilt;
        w.min(self.prior_scale)
    }

    /// Quadrature rule on the part of Θ where `lw` is within LOG_CUTOFF of
    /// its maximum, located on a coarse scan of spacing scale/2.
    fn window(&self, scale: f64, lw: &dyn Fn(f64) -> f64) -> QuadRule {
        let Interval { lo, hi } = self.support;
        let n = ((hi - lo) / (0.5 * scale)).ceil().clamp(4.0, 20000.0) as usize;
        let h = (hi - lo) / n as f64;
        let vals: Vec<f64> = (0..=n).map(|j| lw(lo + j as f64 * h)).collect();
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return self.gl.composite(self.support, n);
        }
        let first = vals.iter().position(|&v| v > top - LOG_CUTOFF).unwrap_or(0);
        let last = vals.iter().rposition(|&v| v > top - LOG_CUTOFF).unwrap_or(n);
        let (i0, i1) = (first.saturating_sub(1), (last + 1).min(n));
        let iv = Interval { lo: lo + i0 as f64 * h, hi: lo + i1 as f64 * h };
        self.gl.composite(iv, (i1 - i0).max(1))
    }

    fn log_prior(&self, th: f64) -> f64 {
        self.m.prior.density(th).ln()
    }

    fn log_like(&self, r: f64, a: f64, p: f64, th: f64) -> f64 {
        let m = self.m;
        let s = m.sender().d1(a, th) * p / m.cost.c;
        let b = r - m.cost.shape.psi(s);
        self.log_prior(th) + m.anchor.log_q(b, th)
    }

    /// Sums ∫ g(θ) e^{lw(θ)} dθ for several g at once, returning the values
    /// divided by ∫ e^{lw} together with log ∫ e^{lw}.
    fn weighted<const K: usize>(
        &self,
        scale: f64,
        lw: &dyn Fn(f64) -> f64,
        g: &dyn Fn(f64) -> [f64; K],
    ) -> ([f64; K], f64) {
        let rule = self.window(scale, lw);
        let logs: Vec<f64> = rule.x.iter().map(|&x| lw(x)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut acc = [0.0; K];
        if !top.is_finite() {
            return ([f64::NAN; K], f64::NEG_INFINITY);
        }
        for ((&x, &w), &l) in rule.x.iter().zip(&rule.w).zip(&logs) {
            let e = w * (l - top).exp();
            if e == 0.0 {
                continue;
            }
            z += e;
            let v = g(x);
            for k in 0..K {
                acc[k] += e * v[k];
            }
        }
        for v in acc.iter_mut() {
            *v /= z;
        }
        (acc, top + z.ln())
    }

    /// The curvature coefficient 𝒜 and remainder ℬ at `(r, a, p)`.
    pub fn coefficients(&self, r: f64, a: f64, p: f64) -> Coefficients {
        let m = self.m;
        let (c, shape) = (m.cost.c, &m.cost.shape);
        let lw = |th: f64| self.log_like(r, a, p, th);
        let g = |th: f64| {
            let ur1 = m.receiver().d1(a, th);
            let us1 = m.sender().d1(a, th);
            let dpsi = shape.dpsi(us1 * p / c);
            let k = ur1 * dpsi / c * us1;
            [k, ur1 * (1.0 - dpsi / c * m.sender().d11(a, th) * p * p), k.abs()]
        };
        let ([ca, cb, scale], _) = self.weighted(self.theta_scale(a, p), &lw, &g);
        Coefficients { a: ca, b: cb, a_scale: scale }
    }

    /// Required curvature a'' = ℬ/𝒜, or StiffRegion.
    pub fn rhs(&self, r: f64, a: f64, p: f64) -> Result<f64> {
        let co = self.coefficients(r, a, p);
        if co.stiff() || !co.b.is_finite() {
            return Err(Error::StiffRegion { r });
        }
        Ok(co.rhs())
    }

    fn boundary(&self, lower: bool, v: f64, p: f64) -> (f64, f64) {
        let m = self.m;
        let Some(msg) = m.message_space.interval() else {
            return (f64::NAN, f64::NEG_INFINITY);
        };
        let end = if lower { msg.lo } else { msg.hi };
        let lw = |th: f64| {
            let s = m.sender().d1(v, th) * p / m.cost.c;
            let x = (end - m.cost.shape.psi(s) - m.anchor.mean(th)) / m.anchor.sigma;
            let tail = if lower { m.anchor.noise.log_cdf(x) } else { m.anchor.noise.log_sf(x) };
            self.log_prior(th) + tail
        };
        let g = |th: f64| [m.receiver().d1(v, th)];
        let ([f], lz) = self.weighted(self.theta_scale(v, p), &lw, &g);
        (f, lz)
    }

    /// Lower boundary equation F₋(u, p), normalized by the pooled mass so it
    /// reads as a receiver marginal utility (action units for quadratic
    /// losses).
    pub fn f_minus(&self, u: f64, p: f64) -> f64 {
        self.boundary(true, u, p).0
    }

    pub fn f_plus(&self, v: f64, p: f64) -> f64 {
        self.boundary(false, v, p).0
    }

    /// Probability that the report pools at the lower and upper message
    /// endpoints.
    pub fn pooling_masses(&self, rule: &dyn ActionFn) -> (f64, f64) {
        let Some(msg) = self.m.message_space.interval() else {
            return (0.0, 0.0);
        };
        let lo = self.boundary(true, rule.value(msg.lo), rule.slope(msg.lo)).1;
        let hi = self.boundary(false, rule.value(msg.hi), rule.slope(msg.hi)).1;
        (lo.exp(), hi.exp())
    }

    /// ∂_r b_a(r, θ) given (a, a', a'') at r.
    fn jacobian(&self, a: f64, p: f64, a2: f64, th: f64) -> f64 {
        let m = self.m;
        let us1 = m.sender().d1(a, th);
        let dpsi = m.cost.shape.dpsi(us1 * p / m.cost.c);
        1.0 - dpsi / m.cost.c * (m.sender().d11(a, th) * p * p + us1 * a2)
    }

    /// Posterior density of θ after report `r`, tabulated on `nodes` points of
    /// the prior support.
    pub fn posterior_density(&self, r: f64, rule: &dyn ActionFn, nodes: usize) -> Result<SampledFunction> {
        let (a, p, a2) = (rule.value(r), rule.slope(r), rule.curvature(r));
        let lw = |th: f64| self.log_like(r, a, p, th);
        let (jz, lz) = self.weighted(self.theta_scale(a, p), &lw, &|th| {
            let j = self.jacobian(a, p, a2, th);
            [j.max(0.0), if j <= 0.0 { 1.0 } else { 0.0 }]
        });
        if jz[1] > IRREGULAR_MASS {
            return Err(Error::RegularityViolation { r, reason: format!("inverse-anchor Jacobian nonpositive on mass {:.3e}", jz[1]) });
        }
        let norm = lz + jz[0].ln();
        let h = self.support.width() / (nodes - 1) as f64;
        let mut xs = Vec::with_capacity(nodes);
        let mut ys = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let th = self.support.lo + i as f64 * h;
            xs.push(th);
            ys.push((lw(th) - norm).exp() * self.jacobian(a, p, a2, th).max(0.0));
        }
        SampledFunction::new(xs, ys)
    }

    /// Posterior mean-type moment E[g(θ) | r] using the Jacobian built from
    /// the supplied curvature. Far-tail states where the Jacobian turns
    /// negative never report r and get zero weight, provided their likelihood
    /// mass is negligible.
    pub fn posterior_expect(&self, r: f64, a: f64, p: f64, a2: f64, g: &dyn Fn(f64) -> f64) -> Result<f64> {
        let lw = |th: f64| self.log_like(r, a, p, th);
        let ([num, den, bad], _) = self.weighted(self.theta_scale(a, p), &lw, &|th| {
            let j = self.jacobian(a, p, a2, th);
            if j <= 0.0 {
                [0.0, 0.0, 1.0]
            } else {
                [g(th) * j, j, 0.0]
            }
        });
        if bad > IRREGULAR_MASS {
            return Err(Error::RegularityViolation { r, reason: format!("inverse-anchor Jacobian nonpositive on mass {bad:.3e}") });
        }
        if !(den > 0.0) {
            return Err(Error::RegularityViolation { r, reason: "nonpositive posterior mass".into() });
        }
        Ok(num / den)
    }

    /// Normalized Bayes residual ∫U^R₁(a(r), θ) w dθ / ∫ w dθ at interior node
    /// `i` of a tabulated rule, with a'' taken from differences of the stored
    /// slopes rather than the ODE right-hand side.
    pub fn bayes_residual(&self, rule: &ActionRule, i: usize) -> Result<f64> {
        let r = rule.r[i];
        let a2 = rule.curvature_from_slopes(i);
        let a = rule.a[i];
        self.posterior_expect(r, a, rule.a1[i], a2, &|th| self.m.receiver().d1(a, th))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::LinearRule;
    use crate::gauss::{self, GaussParams};
    use crate::model::Prior;

    #[test]
    fn inverse_anchor_affine_example() {
        let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let alpha = 0.618034;
        let b = inverse_anchor(1.0, 0.0, alpha, alpha, &m).unwrap();
        assert!((b - 1.381966).abs() < 1e-6);
        // sender at bliss
        assert_eq!(inverse_anchor(0.7, 0.3, 0.3, 2.0, &m).unwrap(), 0.7);
    }

    #[test]
    fn affine_rule_solves_the_untruncated_equation() {
        let p = GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25);
        let eq = gauss::equilibrium(p).unwrap();
        let mut m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.25).unwrap();
        m.prior = Prior::gaussian(0.0, 1.0).unwrap().restrict(Interval { lo: -6.0, hi: 6.0 }).unwrap();
        let k = Kernel::new(&m);
        for &r in &[-1.5, 0.0, 0.4, 2.0] {
            let co = k.coefficients(r, eq.action(r), eq.alpha);
            assert!(co.a > 0.0);
            assert!(co.b.abs() < 1e-4, "r={r} B={}", co.b);
        }
    }

    #[test]
    fn posterior_matches_closed_form_variance() {
        let p = GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25);
        let eq = gauss::equilibrium(p).unwrap();
        let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.25).unwrap();
        let k = Kernel::new(&m);
        let rule = LinearRule { alpha: eq.alpha, intercept: eq.intercept };
        let r = 0.8;
        let mean = k.posterior_expect(r, rule.value(r), eq.alpha, 0.0, &|t| t).unwrap();
        let var = k.posterior_expect(r, rule.value(r), eq.alpha, 0.0, &|t| (t - mean).powi(2)).unwrap();
        assert!((mean - rule.value(r)).abs() < 1e-8);
        assert!((var - eq.posterior_var).abs() < 1e-6);
        let post = k.posterior_density(r, &rule, 4001).unwrap();
        let total: f64 = post.values().iter().sum::<f64>() * (post.nodes()[1] - post.nodes()[0]);
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn diffuse_anchor_leaves_prior() {
        let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1e4, 1.0, 0.0).unwrap();
        let k = Kernel::new(&m);
        let mean = k.posterior_expect(3.0, 0.1, 0.1, 0.0, &|t| t).unwrap();
        let var = k.posterior_expect(3.0, 0.1, 0.1, 0.0, &|t| (t - mean).powi(2)).unwrap();
        assert!(mean.abs() < 1e-3 && (var - 1.0).abs() < 1e-3);
    }

    #[test]
    fn expensive_distortion_is_pure_anchor_inference() {
        // c large: b_a → r, so B → E[U^R₁ | anchor = r], A → 0
        let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1e8, 0.0).unwrap();
        let k = Kernel::new(&m);
        let co = k.coefficients(1.0, 0.0, 0.5);
        // posterior of θ given b = 1 is N(0.5, 0.5); U^R₁ = θ - a
        assert!((co.b - 0.5).abs() < 1e-6);
        assert!(co.a.abs() < 1e-7);
    }
}
