//! Uninformative anchors: the babbling action, the covariance and curvature
//! aggregates, the first nonconstant Neumann eigenpair of L_q v = -(q v')'/q
//! and the critical cost at which nonconstant rules bifurcate from babbling.

use crate::gauss;
use crate::model::{Anchor, ModelSpec};
use crate::numerics::{expand_bracket, find_root, solve_tridiagonal, Grid, Interval, SampledFunction};
use crate::{Error, Result};
use serde::Serialize;

/// Prior-optimal receiver action: the root of E[U^R₁(a, θ)].
pub fn babbling_action(m: &ModelSpec) -> Result<f64> {
    let rule = m.prior.rule(m.prior.natural_scale());
    let g = |a: f64| rule.integrate(|th| m.prior.density(th) * m.receiver().d1(a, th));
    let mean = m.prior.mean();
    let sup = m.prior.support();
    let lim = Interval { lo: mean - 10.0 * sup.width(), hi: mean + 10.0 * sup.width() };
    let br = expand_bracket(g, mean, 0.1 * m.prior.natural_scale(), lim)?;
    find_root(g, br, 1e-13)
}

/// Tridiagonal finite-difference form of L_q with Neumann ends, kept in
/// the symmetric form W^{1/2} L W^{-1/2} with W the q-weighted cell sizes.
#[derive(Debug, Clone)]
pub struct SlProblem {
    pub x: Vec<f64>,
    q: Vec<f64>,
    w: Vec<f64>,
    // L: sub (i, i-1), diag, sup (i, i+1)
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl SlProblem {
    pub fn new(iv: Interval, nodes: usize, q: impl Fn(f64) -> f64) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::InvalidModel("eigenproblem needs at least 3 nodes".into()));
        }
        let x = Grid::uniform(iv, nodes).nodes;
        let h = iv.width() / (nodes - 1) as f64;
        let qv: Vec<f64> = x.iter().map(|&t| q(t)).collect();
        let qh: Vec<f64> = x.windows(2).map(|p| q(0.5 * (p[0] + p[1]))).collect();
        if qv.iter().chain(&qh).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidModel("anchor density must be positive on the truncated grid".into()));
        }
        let n = nodes;
        let mut w = vec![0.0; n];
        let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let cell = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            w[i] = qv[i] * cell;
            let left = if i > 0 { qh[i - 1] / h } else { 0.0 };
            let right = if i + 1 < n { qh[i] / h } else { 0.0 };
            sub[i] = -left / w[i];
            sup[i] = -right / w[i];
            diag[i] = (left + right) / w[i];
        }
        Ok(SlProblem { x, q: qv, w, sub, diag, sup })
    }

    /// Standardized anchor noise of `anchor` in b-space, truncated at its tail
    /// bound and centered on the anchor location at θ = 0.
    pub fn from_anchor(anchor: &Anchor, nodes: usize) -> Result<Self> {
        let (lo, hi) = anchor.noise.tail_bound();
        let s = anchor.sigma;
        let b0 = anchor.mean(0.0);
        let iv = Interval::new(b0 + s * lo, b0 + s * hi)?;
        Self::new(iv, nodes, |b| anchor.noise.pdf((b - b0) / s) / s)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn density(&self) -> &[f64] {
        &self.q
    }

    fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.w).map(|((a, b), w)| a * b * w).sum()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.sub[i] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Symmetric tridiagonal (diagonal, off-diagonal) of `scale·L + shift·I`.
    fn symmetric(&self, scale: f64, shift: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.diag.iter().map(|v| scale * v + shift).collect();
        let e = (0..self.len() - 1).map(|i| -scale * (self.sup[i] * self.sub[i + 1]).sqrt()).collect();
        (d, e)
    }
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal (d, e).
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut p = d[0] - x;
    if p < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let prev = if p == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1.0) } else { p };
        p = d[i] - x - e[i - 1] * e[i - 1] / prev;
        if p < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
fn tridiagonal_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    let radius = (0..d.len())
        .map(|i| {
            let l = if i > 0 { e[i - 1].abs() } else { 0.0 };
            let r = if i < e.len() { e[i].abs() } else { 0.0 };
            (d[i] - l - r, d[i] + l + r)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| (a.min(lo), b.max(hi)));
    let (mut lo, mut hi) = radius;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * (lo.abs() + hi.abs()).max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The first nonconstant Neumann eigenpair with its spectral gap.
#[derive(Debug, Clone, Serialize)]
pub struct Eigenpair {
    pub lambda1: f64,
    /// λ₂ - λ₁
    pub gap: f64,
    pub x: Vec<f64>,
    /// Normalized in L²(q), increasing.
    pub v1: Vec<f64>,
    pub iterations: usize,
    pub monotone: bool,
}

impl Eigenpair {
    pub fn v1_fn(&self) -> Result<SampledFunction> {
        SampledFunction::new(self.x.clone(), self.v1.clone())
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("x,v1\n");
        for (x, v) in self.x.iter().zip(&self.v1) {
            s.push_str(&format!("{x},{v}\n"));
        }
        s
    }
}

const EIGEN_TOL: f64 = 1e-12;
const EIGEN_MAX_ITER: usize = 5000;

/// Shifted inverse iteration with the modes in `deflate` projected out.
fn inverse_iteration(p: &SlProblem, deflate: &[Vec<f64>], shift0: f64) -> Result<(f64, Vec<f64>, usize)> {
    let project = |v: &mut Vec<f64>| {
        for u in deflate {
            let c = p.dot(v, u) / p.dot(u, u);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
        let norm = p.dot(v, v).sqrt();
        for vi in v.iter_mut() {
            *vi /= norm;
        }
    };
    let mut v: Vec<f64> = p.x.iter().map(|&t| t - p.x[0]).collect();
    for (i, vi) in v.iter_mut().enumerate() {
        *vi += 1e-3 * ((i * 7919) % 97) as f64 / 97.0;
    }
    project(&mut v);
    let mut lambda = f64::NAN;
    for it in 1..=EIGEN_MAX_ITER {
        let diag: Vec<f64> = p.diag.iter().map(|d| d - shift0).collect();
        let mut y = solve_tridiagonal(&p.sub, &diag, &p.sup, &v);
        if y.iter().any(|t| !t.is_finite()) {
            return Err(Error::SpectralFailure(format!("singular shifted solve at iteration {it}")));
        }
        project(&mut y);
        let ly = p.apply(&y);
        let rq = p.dot(&y, &ly);
        let resid: f64 = ly.iter().zip(&y).map(|(a, b)| (a - rq * b).powi(2)).zip(&p.w).map(|(r, w)| r * w).sum();
        let sign = p.dot(&y, &v).signum();
        v = y.iter().map(|t| t * sign).collect();
        let converged = (rq - lambda).abs() <= EIGEN_TOL * rq.abs().max(1.0) && resid.sqrt() <= 1e-6 * rq.abs().max(1.0);
        lambda = rq;
        if converged {
            return Ok((lambda, v, it));
        }
    }
    Err(Error::SpectralFailure(format!("inverse iteration stalled near λ = {lambda}")))
}

/// First nonconstant eigenpair of L_q, checked against a Sturm-sequence
/// bisection of the same matrix.
pub fn eigen_first(p: &SlProblem) -> Result<Eigenpair> {
    let (d, e) = p.symmetric(1.0, 0.0);
    let l1 = tridiagonal_eigenvalue(&d, &e, 1);
    let l2 = tridiagonal_eigenvalue(&d, &e, 2);
    if !(l1 > 0.0 && l2 > l1) {
        return Err(Error::SpectralFailure(format!("first nonconstant eigenvalue not simple: {l1}, {l2}")));
    }
    let ones = vec![1.0; p.len()];
    // shift below λ₁ so the iteration stays on the first nonconstant mode
    let (lambda, mut v, iterations) = inverse_iteration(p, &[ones], -0.5 * l1)?;
    if (lambda - l1).abs() > 1e-8 * l1 {
        return Err(Error::SpectralFailure(format!("inverse iteration gave {lambda}, bisection {l1}")));
    }
    if v[v.len() - 1] < v[0] {
        v.iter_mut().for_each(|t| *t = -*t);
    }
    let monotone = v.windows(2).all(|w| w[1] >= w[0]);
    Ok(Eigenpair { lambda1: lambda, gap: l2 - l1, x: p.x.clone(), v1: v, iterations, monotone })
}

/// Babbling-point aggregates and the critical distortion cost.
#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub a0: f64,
    /// Cov(U^R₁(a⁰, θ), U^S₁(a⁰, θ))
    pub a_cov: f64,
    /// -E[U^R₁₁(a⁰, θ)]
    pub h_curv: f64,
    pub lambda1: f64,
    pub gap: f64,
    pub phi2: f64,
    pub c_star: f64,
    #[serde(skip)]
    pub eigen: Eigenpair,
}

pub const SL_NODES: usize = 2001;

pub fn critical_cost(m: &ModelSpec, nodes: usize) -> Result<Calibration> {
    let a0 = babbling_action(m)?;
    let rule = m.prior.rule(m.prior.natural_scale());
    let f = |th: f64| m.prior.density(th);
    let ur = |th: f64| m.receiver().d1(a0, th);
    let us = |th: f64| m.sender().d1(a0, th);
    let er = rule.integrate(|t| f(t) * ur(t));
    let es = rule.integrate(|t| f(t) * us(t));
    let a_cov = rule.integrate(|t| f(t) * (ur(t) - er) * (us(t) - es));
    let scale = rule.integrate(|t| f(t) * (ur(t) - er).powi(2)).sqrt() * rule.integrate(|t| f(t) * (us(t) - es).powi(2)).sqrt();
    if !(a_cov > 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::AlignmentViolation { cov: a_cov });
    }
    let h_curv = -rule.integrate(|t| f(t) * m.receiver().d11(a0, t));
    if !(h_curv > 0.0) {
        return Err(Error::AssumptionViolation(format!("receiver curvature at the babbling action is {h_curv}")));
    }
    let phi2 = m.cost.shape.d2phi(0.0);
    if !(phi2 > 0.0) {
        return Err(Error::AssumptionViolation("distortion cost has no curvature at zero".into()));
    }
    let eigen = eigen_first(&SlProblem::from_anchor(&m.anchor, nodes)?)?;
    Ok(Calibration {
        a0,
        a_cov,
        h_curv,
        lambda1: eigen.lambda1,
        gap: eigen.gap,
        phi2,
        c_star: a_cov * eigen.lambda1 / (h_curv * phi2),
        eigen,
    })
}

/// Smallest two singular values of the discretized linearization
/// A·L_q - c φ''(0) H at cost `c`.
pub fn linearized_singular_values(m: &ModelSpec, cal: &Calibration, c: f64, nodes: usize) -> Result<(f64, f64)> {
    let p = SlProblem::from_anchor(&m.anchor, nodes)?;
    let (d, e) = p.symmetric(cal.a_cov, -c * cal.phi2 * cal.h_curv);
    let below = sturm_count(&d, &e, 0.0);
    let lo = below.saturating_sub(2);
    let hi = (below + 2).min(d.len());
    let mut s: Vec<f64> = (lo..hi).map(|k| tridiagonal_eigenvalue(&d, &e, k).abs()).collect();
    s.sort_by(f64::total_cmp);
    Ok((s[0], s[1]))
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaRow {
    pub sigma: f64,
    pub c: f64,
    pub alpha: f64,
    pub posterior_var: f64,
    pub reporting_cost: f64,
    pub w_r: f64,
}

/// Knife-edge Gaussian family c = σ_θ²/σ² along shrinking σ with
/// α²/c = (σ_ref/σ)², where σ_ref is the first entry.
pub fn small_sigma_sweep(sigma_theta: f64, d: f64, sigmas: &[f64]) -> Result<Vec<SigmaRow>> {
    let Some(&sref) = sigmas.first() else {
        return Ok(Vec::new());
    };
    sigmas
        .iter()
        .map(|&s| {
            let c = sigma_theta * sigma_theta / (s * s);
            let alpha = c.sqrt() * sref / s;
            let eq = gauss::uninformative_family(sigma_theta, c, alpha, d)?;
            Ok(SigmaRow { sigma: s, c, alpha, posterior_var: eq.posterior_var, reporting_cost: eq.cost, w_r: eq.w_r })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Payoff;

    #[test]
    fn neumann_laplacian_on_zero_pi() {
        let p = SlProblem::new(Interval { lo: 0.0, hi: std::f64::consts::PI }, 801, |_| 1.0).unwrap();
        let e = eigen_first(&p).unwrap();
        assert!((e.lambda1 - 1.0).abs() < 1e-5, "{}", e.lambda1);
        assert!((e.gap - 3.0).abs() < 1e-4);
        assert!(e.monotone);
        // v₁ ∝ -cos
        let scale = e.v1[e.v1.len() - 1];
        for (x, v) in e.x.iter().zip(&e.v1).step_by(50) {
            assert!((v / scale + x.cos()).abs() < 1e-5);
        }
    }

    #[test]
    fn sturm_count_matches_diagonal_matrix() {
        let d = [3.0, 1.0, 2.0];
        let e = [0.0, 0.0];
        assert_eq!(sturm_count(&d, &e, 1.5), 1);
        assert!((tridiagonal_eigenvalue(&d, &e, 2) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_receiver_babbles_at_the_midpoint() {
        let mut m = ModelSpec::uniform_quadratic(0.0, 1.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        m.payoffs.receiver = Payoff::general(|a: f64, t: f64| -(a - t).powi(4));
        assert!((babbling_action(&m).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn state_independent_sender_violates_alignment() {
        let mut m = ModelSpec::gaussian_quadratic(1.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        m.payoffs.sender = Payoff::general(|a: f64, _t: f64| -(a - 1.0).powi(2) / 2.0);
        assert!(matches!(critical_cost(&m, 401), Err(Error::AlignmentViolation { .. })));
    }
}
