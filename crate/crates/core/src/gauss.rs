//! Closed-form linear equilibrium of the Gaussian-quadratic model:
//! θ ~ N(0, σ_θ²), b = βθ + σx, quadratic losses with bias d, cost c(r-b)²/2.

use crate::model::{AnchorMean, CostShape, DeltaHat, Loss, MessageSpace, ModelSpec, Noise, Payoff, PriorKind};
use crate::numerics::{find_root, Interval, GAUSS_TRUNCATION};
use crate::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussParams {
    pub sigma_theta: f64,
    pub beta: f64,
    pub sigma: f64,
    pub c: f64,
    pub d: f64,
}

impl GaussParams {
    pub fn new(sigma_theta: f64, beta: f64, sigma: f64, c: f64, d: f64) -> Self {
        GaussParams { sigma_theta, beta, sigma, c, d }
    }

    fn check(&self) -> Result<()> {
        let ok = self.sigma_theta > 0.0
            && self.sigma > 0.0
            && self.c > 0.0
            && self.beta >= 0.0
            && [self.sigma_theta, self.beta, self.sigma, self.c, self.d].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBranch(format!("need σ_θ, σ, c > 0 and β >= 0, got {self:?}")))
        }
    }

    /// The β = 0 knife edge cσ² = σ_θ², where every α > 0 is an equilibrium.
    pub fn on_knife_edge(&self) -> bool {
        self.beta == 0.0 && (self.c * self.sigma * self.sigma - self.sigma_theta.powi(2)).abs()
            <= 1e-12 * self.sigma_theta.powi(2)
    }
}

/// Affine equilibrium `a(r) = α r - α² d / c` with its report rule and welfare.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearEquilibrium {
    pub params: GaussParams,
    pub alpha: f64,
    pub intercept: f64,
    pub posterior_var: f64,
    pub w_r: f64,
    pub w_s: f64,
    /// Expected distortion cost E[c (r - b)² / 2].
    pub cost: f64,
    /// Mean inflation E[r - b].
    pub inflation: f64,
}

pub const CSV_HEADER: &str = "alpha,beta,sigma,sigma_theta,c,d,posterior_var,W_R,W_S,cost,inflation";

impl LinearEquilibrium {
    /// Build the equilibrium objects for a given slope α (β = 0 knife edge
    /// or the β > 0 root).
    pub fn from_alpha(p: GaussParams, alpha: f64) -> Self {
        let GaussParams { sigma_theta, beta, c, d, .. } = p;
        let s2 = sigma_theta * sigma_theta;
        let var = c * (1.0 - beta * alpha) * s2 / (c + alpha * alpha);
        let w_r = -0.5 * var;
        let w_s = -0.5 * (var + d * d) * (1.0 + alpha * alpha / c);
        LinearEquilibrium {
            params: p,
            alpha,
            intercept: -alpha * alpha * d / c,
            posterior_var: var,
            w_r,
            w_s,
            cost: alpha * alpha / (2.0 * c) * (var + d * d),
            inflation: alpha * d / c,
        }
    }

    pub fn action(&self, r: f64) -> f64 {
        self.alpha * r + self.intercept
    }

    /// Sender's equilibrium report at state θ and anchor b.
    pub fn report(&self, theta: f64, b: f64) -> f64 {
        let GaussParams { beta, c, d, .. } = self.params;
        let a = self.alpha;
        let k = c + a * a;
        (c * beta + a) / k * theta + c / k * (b - beta * theta) + a * d / c
    }

    /// Sender welfare through the decomposition
    /// -(1-βα)σ_θ²/2 - d²/2 - d²α²/(2c); equal to `w_s` on the β > 0 branch.
    pub fn w_s_decomposed(&self) -> f64 {
        let GaussParams { sigma_theta, beta, c, d, .. } = self.params;
        let a = self.alpha;
        -0.5 * (1.0 - beta * a) * sigma_theta * sigma_theta - 0.5 * d * d - d * d * a * a / (2.0 * c)
    }

    pub fn is_babbling(&self) -> bool {
        self.alpha == 0.0
    }

    pub fn csv_row(&self) -> String {
        let p = &self.params;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.alpha, p.beta, p.sigma, p.sigma_theta, p.c, p.d, self.posterior_var, self.w_r, self.w_s, self.cost,
            self.inflation
        )
    }
}

/// Positive root of βσ_θ²α² + (cσ² + cβ²σ_θ² - σ_θ²)α - cβσ_θ² = 0.
pub fn alpha(p: &GaussParams) -> Result<f64> {
    p.check()?;
    if p.beta == 0.0 {
        return Err(Error::InvalidBranch("β = 0 has no interior root".into()));
    }
    let s2 = p.sigma_theta * p.sigma_theta;
    let qa = p.beta * s2;
    let qb = p.c * p.sigma * p.sigma + p.c * p.beta * p.beta * s2 - s2;
    let qc = p.c * p.beta * s2; // magnitude of the negative constant
    let disc = (qb * qb + 4.0 * qa * qc).sqrt();
    // cancellation-free form of (-qb + disc) / (2 qa)
    Ok(if qb > 0.0 { 2.0 * qc / (qb + disc) } else { (disc - qb) / (2.0 * qa) })
}

/// F(α) = σ_θ²α(1-βα) - c[(σ² + β²σ_θ²)α - βσ_θ²], zero at the equilibrium.
pub fn f_identity(p: &GaussParams, a: f64) -> f64 {
    let s2 = p.sigma_theta * p.sigma_theta;
    s2 * a * (1.0 - p.beta * a) - p.c * ((p.sigma * p.sigma + p.beta * p.beta * s2) * a - p.beta * s2)
}

/// Linear equilibrium. With β = 0 off the knife edge only babbling (α = 0)
/// survives; on the knife edge the slope is not pinned down and
/// [`uninformative_family`] must be used instead.
pub fn equilibrium(p: GaussParams) -> Result<LinearEquilibrium> {
    p.check()?;
    if p.beta == 0.0 {
        if p.on_knife_edge() {
            return Err(Error::InvalidBranch("knife edge cσ² = σ_θ²: slope is free, pass α explicitly".into()));
        }
        return Ok(LinearEquilibrium::from_alpha(p, 0.0));
    }
    Ok(LinearEquilibrium::from_alpha(p, alpha(&p)?))
}

/// Parameters of `m` when it is the Gaussian-quadratic benchmark: centred
/// normal prior on its default support, b = βθ + σx with normal x, unit
/// quadratic losses, constant bias, quadratic cost and whole-line messages.
pub fn params_of(m: &ModelSpec) -> Option<GaussParams> {
    let PriorKind::Gaussian { mean, sd } = *m.prior.kind() else {
        return None;
    };
    let sup = m.prior.support();
    let full = mean == 0.0 && sup.lo == -GAUSS_TRUNCATION * sd && sup.hi == GAUSS_TRUNCATION * sd;
    let unit = |p: &Payoff| matches!(p, Payoff::Loss { loss: Loss::Quadratic { kappa }, delta_hat: DeltaHat::Constant(k), .. } if *kappa == 1.0 && *k == 1.0);
    let receiver_ok = unit(m.receiver()) && m.receiver().bias() == 0.0;
    let beta = match m.anchor.b0 {
        AnchorMean::Affine { beta0, beta } if beta0 == 0.0 => beta,
        _ => return None,
    };
    let ok = full
        && receiver_ok
        && unit(m.sender())
        && m.anchor.noise == Noise::Gaussian
        && matches!(m.cost.shape, CostShape::Quadratic)
        && m.message_space == MessageSpace::WholeLine;
    ok.then(|| GaussParams::new(sd, beta, m.anchor.sigma, m.cost.c, m.sender().bias()))
}

/// Member of the β = 0 knife-edge family cσ² = σ_θ² with slope α.
pub fn uninformative_family(sigma_theta: f64, c: f64, alpha: f64, d: f64) -> Result<LinearEquilibrium> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidBranch(format!("slope must be >= 0, got {alpha}")));
    }
    let p = GaussParams::new(sigma_theta, 0.0, sigma_theta / c.sqrt(), c, d);
    p.check()?;
    Ok(LinearEquilibrium::from_alpha(p, alpha))
}

/// Bias thresholds (d_low, d_high) separating the three sender regimes.
pub fn thresholds(p: &GaussParams) -> Result<(f64, f64)> {
    let a = alpha(p)?;
    let s2 = p.sigma_theta * p.sigma_theta;
    let lo2 = p.c * p.beta * s2 * (1.0 - p.beta * a) / (2.0 * a + p.beta * (p.c - a * a));
    let hi2 = p.c * p.beta * s2 / (2.0 * a);
    Ok((lo2.sqrt(), hi2.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derivatives {
    pub dalpha_dc: f64,
    pub dalpha_dsigma: f64,
    pub dws_dc: f64,
    pub dws_dsigma: f64,
}

/// Closed-form comparative statics by implicit differentiation.
pub fn derivatives(p: &GaussParams) -> Result<Derivatives> {
    let a = alpha(p)?;
    let GaussParams { sigma_theta, beta, sigma, c, d } = *p;
    let s2 = sigma_theta * sigma_theta;
    let k = c + a * a;
    let dalpha_dc = -a * a * (1.0 - beta * a) / (c * beta * k);
    let dalpha_dsigma = -2.0 * c * sigma * a * a / (beta * s2 * k);
    let bracket = 0.5 * beta * s2 - d * d * a / c;
    Ok(Derivatives {
        dalpha_dc,
        dalpha_dsigma,
        dws_dc: dalpha_dc * bracket + d * d * a * a / (2.0 * c * c),
        dws_dsigma: dalpha_dsigma * bracket,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub alpha: f64,
    pub w_s: f64,
    pub w_r: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    pub points: Vec<FrontierPoint>,
    /// Grid maximizer of W_S + W_R.
    pub argmax_grid: f64,
    /// Root of d(W_S + W_R)/dα.
    pub argmax_foc: f64,
    /// (c + α²)² = c²σ_θ²/d², solved for α.
    pub argmax_closed: f64,
}

fn frontier_point(sigma_theta: f64, c: f64, d: f64, a: f64) -> FrontierPoint {
    let s2 = sigma_theta * sigma_theta;
    let w_r = -0.5 * c * s2 / (c + a * a);
    let w_s = -0.5 * s2 - 0.5 * d * d - d * d * a * a / (2.0 * c);
    FrontierPoint { alpha: a, w_s, w_r, total: w_s + w_r }
}

/// Welfare along the knife-edge family over the given slopes, with the
/// maximizer of total welfare found on the grid and by root-finding.
pub fn pareto_frontier(sigma_theta: f64, c: f64, d: f64, alphas: &[f64]) -> Result<Frontier> {
    if alphas.is_empty() {
        return Err(Error::InvalidModel("empty slope grid".into()));
    }
    let points: Vec<FrontierPoint> = alphas.iter().map(|&a| frontier_point(sigma_theta, c, d, a)).collect();
    let best = points.iter().max_by(|x, y| x.total.total_cmp(&y.total)).unwrap();
    let s2 = sigma_theta * sigma_theta;
    let foc = |a: f64| c * s2 * a / (c + a * a).powi(2) - d * d * a / c;
    let closed_sq = c * sigma_theta / d.abs() - c;
    let argmax_closed = if closed_sq > 0.0 { closed_sq.sqrt() } else { 0.0 };
    let argmax_foc = if argmax_closed == 0.0 {
        0.0
    } else {
        // the interior root is the unique positive zero of foc(a)/a
        let g = |a: f64| foc(a) / a;
        let mut hi = 1.0;
        while g(hi) > 0.0 {
            hi *= 2.0;
        }
        find_root(g, Interval::new(1e-12, hi)?, 1e-13)?
    };
    Ok(Frontier { argmax_grid: best.alpha, points, argmax_foc, argmax_closed })
}

/// Sign checks at one lattice point; each flag is true when the finite
/// difference has the predicted sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignRow {
    pub params: GaussParams,
    pub d_low: f64,
    pub d_high: f64,
    pub alpha_falls_in_c: bool,
    pub alpha_falls_in_sigma: bool,
    pub beta_alpha_rises_in_beta: bool,
    pub var_rises_in_c: bool,
    pub var_rises_in_sigma: bool,
    /// ∂W_S/∂c and ∂W_S/∂σ at d below d_low, between the thresholds and
    /// above d_high.
    pub regimes: [bool; 3],
}

impl SignRow {
    pub fn violations(&self) -> usize {
        [
            self.alpha_falls_in_c,
            self.alpha_falls_in_sigma,
            self.beta_alpha_rises_in_beta,
            self.var_rises_in_c,
            self.var_rises_in_sigma,
        ]
        .iter()
        .chain(&self.regimes)
        .filter(|ok| !**ok)
        .count()
    }
}

fn central(f: impl Fn(f64) -> Result<f64>, x: f64) -> Result<f64> {
    let h = 1e-5 * x.abs().max(1e-3);
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Centered finite-difference signs of the comparative statics and of the
/// sender-welfare regime flips at one parameter point (d is ignored).
pub fn sign_row(p: GaussParams) -> Result<SignRow> {
    let a = |q: GaussParams| alpha(&q);
    let var = |q: GaussParams| equilibrium(q).map(|e| e.posterior_var);
    let ws = |q: GaussParams| equilibrium(q).map(|e| e.w_s);
    let (d_low, d_high) = thresholds(&p)?;
    let da_dc = central(|c| a(GaussParams { c, ..p }), p.c)?;
    let da_ds = central(|sigma| a(GaussParams { sigma, ..p }), p.sigma)?;
    let dba = central(|beta| Ok(beta * a(GaussParams { beta, ..p })?), p.beta)?;
    let dv_dc = central(|c| var(GaussParams { c, ..p }), p.c)?;
    let dv_ds = central(|sigma| var(GaussParams { sigma, ..p }), p.sigma)?;
    let probe = |d: f64| -> Result<(f64, f64)> {
        let q = GaussParams { d, ..p };
        Ok((central(|c| ws(GaussParams { c, ..q }), q.c)?, central(|sigma| ws(GaussParams { sigma, ..q }), q.sigma)?))
    };
    let (lo_c, lo_s) = probe(0.5 * d_low)?;
    let (mid_c, mid_s) = probe(0.5 * (d_low + d_high))?;
    let (hi_c, hi_s) = probe(2.0 * d_high)?;
    Ok(SignRow {
        params: p,
        d_low,
        d_high,
        alpha_falls_in_c: da_dc < 0.0,
        alpha_falls_in_sigma: da_ds < 0.0,
        beta_alpha_rises_in_beta: dba > 0.0,
        var_rises_in_c: dv_dc > 0.0,
        var_rises_in_sigma: dv_ds > 0.0,
        regimes: [lo_c < 0.0 && lo_s < 0.0, mid_c > 0.0 && mid_s < 0.0, hi_c > 0.0 && hi_s > 0.0],
    })
}

/// `sign_row` over every (σ_θ, β, σ, c) in `values`⁴.
pub fn sign_lattice(values: &[f64]) -> Result<Vec<SignRow>> {
    let mut rows = Vec::with_capacity(values.len().pow(4));
    for &st in values {
        for &beta in values {
            for &sigma in values {
                for &c in values {
                    rows.push(sign_row(GaussParams::new(st, beta, sigma, c, 0.0))?);
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_slope_at_unit_parameters() {
        let p = GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.0);
        let a = alpha(&p).unwrap();
        assert!((a - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert!(f_identity(&p, a).abs() < 1e-15);
    }

    #[test]
    fn thresholds_at_unit_parameters() {
        let (lo, hi) = thresholds(&GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.0)).unwrap();
        assert!((lo - 0.45388).abs() < 1e-5, "{lo}");
        assert!((hi - 0.89945).abs() < 1e-5, "{hi}");
    }

    #[test]
    fn receiver_welfare_value() {
        let e = equilibrium(GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.25)).unwrap();
        assert!((e.w_r + 0.138_196_601_125_010_5).abs() < 1e-12);
        assert!((e.w_s - e.w_s_decomposed()).abs() < 1e-14);
    }

    #[test]
    fn report_rule_solves_sender_foc() {
        let e = equilibrium(GaussParams::new(1.3, 0.7, 0.6, 2.0, 0.4)).unwrap();
        let (th, b) = (0.8, -0.3);
        let r = e.report(th, b);
        let foc = -(e.action(r) - th - 0.4) * e.alpha - 2.0 * (r - b);
        assert!(foc.abs() < 1e-13);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = GaussParams::new(1.2, 0.8, 0.7, 1.5, 0.6);
        let dv = derivatives(&p).unwrap();
        let h = 1e-6;
        let at = |q: GaussParams| alpha(&q).unwrap();
        let ws = |q: GaussParams| equilibrium(q).unwrap().w_s;
        let pc = |dc: f64| GaussParams { c: p.c + dc, ..p };
        let ps = |ds: f64| GaussParams { sigma: p.sigma + ds, ..p };
        assert!(((at(pc(h)) - at(pc(-h))) / (2.0 * h) - dv.dalpha_dc).abs() < 1e-8);
        assert!(((at(ps(h)) - at(ps(-h))) / (2.0 * h) - dv.dalpha_dsigma).abs() < 1e-8);
        assert!(((ws(pc(h)) - ws(pc(-h))) / (2.0 * h) - dv.dws_dc).abs() < 1e-8);
        assert!(((ws(ps(h)) - ws(ps(-h))) / (2.0 * h) - dv.dws_dsigma).abs() < 1e-8);
    }

    #[test]
    fn babbling_off_knife_edge() {
        let e = equilibrium(GaussParams::new(1.0, 0.0, 2.0, 1.0, 0.3)).unwrap();
        assert!(e.is_babbling());
        assert!((e.w_r + 0.5).abs() < 1e-15);
        assert!(matches!(equilibrium(GaussParams::new(1.0, 0.0, 1.0, 1.0, 0.3)), Err(Error::InvalidBranch(_))));
        assert!(matches!(equilibrium(GaussParams::new(1.0, -1.0, 1.0, 1.0, 0.3)), Err(Error::InvalidBranch(_))));
    }

    #[test]
    fn uninformative_family_objects() {
        let e = uninformative_family(1.0, 1.0, 2.0, 0.25).unwrap();
        assert!((e.posterior_var - 0.2).abs() < 1e-15);
        let ws = -0.5 - 0.5 * 0.0625 - 0.0625 * 4.0 / 2.0;
        assert!((e.w_s - ws).abs() < 1e-15);
        // report rule α/(c+α²) θ + c/(c+α²) b + αd/c
        let r = e.report(0.5, -1.0);
        assert!((r - (2.0 / 5.0 * 0.5 - 1.0 / 5.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn frontier_argmax_sqrt3() {
        let alphas: Vec<f64> = (0..=40_000).map(|i| i as f64 * 1e-4).collect();
        let f = pareto_frontier(1.0, 1.0, 0.25, &alphas).unwrap();
        let s3 = 3f64.sqrt();
        assert!((f.argmax_closed - s3).abs() < 1e-14);
        assert!((f.argmax_foc - s3).abs() < 1e-10);
        assert!((f.argmax_grid - s3).abs() < 1e-3);
    }

    #[test]
    fn negative_bias_mirrors() {
        let pos = equilibrium(GaussParams::new(1.0, 1.0, 1.0, 1.0, 0.3)).unwrap();
        let neg = equilibrium(GaussParams::new(1.0, 1.0, 1.0, 1.0, -0.3)).unwrap();
        assert_eq!(pos.w_s, neg.w_s);
        assert_eq!(pos.inflation, -neg.inflation);
        assert_eq!(pos.report(0.2, 0.1) - pos.inflation, neg.report(0.2, 0.1) - neg.inflation);
    }
}
