use super::bayes::Kernel;
use super::rule::ActionRule;
use super::sender::communication_cost;
use crate::model::ModelSpec;
use crate::numerics::{expand_bracket, fd_step, find_root, rk4_step, solve_dense, solve_tridiagonal, Interval};
use crate::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BvpOptions {
    /// RK4 steps (and stored grid intervals) across the message interval.
    pub intervals: usize,
    /// Segments for multiple shooting; must divide `intervals`.
    pub segments: usize,
    /// Points on the initial-slope scan.
    pub slope_grid: usize,
    /// Upper end of the slope scan; derived from the model when `None`.
    pub p_max: Option<f64>,
    /// Tolerance on boundary equations and matching conditions.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions { intervals: 480, segments: 48, slope_grid: 48, p_max: None, tol: 1e-7, max_iter: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SingleShooting,
    MultipleShooting,
    GreenPicard,
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub method: Method,
    /// Slope at the lower endpoint.
    pub p0: f64,
    pub f_minus: f64,
    pub f_plus: f64,
    pub communication_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Telemetry {
    pub message_interval: Interval,
    pub method: Method,
    pub candidates: Vec<Candidate>,
    pub selected: usize,
    /// Reports where the integration met a degenerate curvature coefficient.
    pub stiff_points: Vec<f64>,
    pub iterations: usize,
    pub bayes_residual_max: f64,
    pub min_slope: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BvpSolution {
    pub rule: ActionRule,
    pub telemetry: Telemetry,
}

/// One single-shooting trajectory from the lower endpoint.
#[derive(Debug, Clone)]
pub struct Shot {
    pub p0: f64,
    pub rule: Option<ActionRule>,
    /// F₊ at the upper endpoint; NaN if the integration broke down.
    pub residual: f64,
    pub stiff_at: Option<f64>,
}

fn boundary_root(k: &Kernel, f: impl Fn(f64) -> f64) -> Result<f64> {
    let m = k.model();
    let x0 = m.receiver().ideal(m.prior.mean())?;
    let step = m.prior.natural_scale().min(1.0);
    let lim = Interval { lo: x0 - 1e3 * step, hi: x0 + 1e3 * step };
    let br = expand_bracket(&f, x0, step, lim)?;
    find_root(&f, br, 1e-12)
}

/// Lower-endpoint action u*(p) solving F₋(u, p) = 0.
pub fn u_star(k: &Kernel, p: f64) -> Result<f64> {
    boundary_root(k, |u| k.f_minus(u, p))
}

/// Upper-endpoint action v*(p) solving F₊(v, p) = 0.
pub fn v_star(k: &Kernel, p: f64) -> Result<f64> {
    boundary_root(k, |v| k.f_plus(v, p))
}

fn message_interval(m: &ModelSpec) -> Result<Interval> {
    m.message_space
        .interval()
        .ok_or_else(|| Error::NoRegularEquilibrium("the boundary-value solver needs a compact message interval".into()))
}

fn ode(k: &Kernel, t: f64, y: &[f64; 2]) -> [f64; 2] {
    if !(y[1] > 0.0) {
        return [f64::NAN; 2];
    }
    match k.rhs(t, y[0], y[1]) {
        Ok(g) => [y[1], g],
        Err(_) => [f64::NAN; 2],
    }
}

/// Integrate `steps` RK4 steps of size `h` from `(t0, y0)`, recording every
/// node. Returns the nodes and the first report where the state stopped being
/// admissible (nonpositive slope or degenerate curvature coefficient).
fn integrate(k: &Kernel, t0: f64, y0: [f64; 2], h: f64, steps: usize) -> (Vec<[f64; 3]>, Option<f64>) {
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    let mut f = |t: f64, y: &[f64; 2]| ode(k, t, y);
    for i in 0..=steps {
        let t = t0 + i as f64 * h;
        let g = f(t, &y)[1];
        if !g.is_finite() {
            return (out, Some(t));
        }
        out.push([y[0], y[1], g]);
        if i < steps {
            y = rk4_step(&mut f, t, &y, h);
        }
    }
    (out, None)
}

/// Integrate a'' = ℬ/𝒜 across the message interval from (u*(p0), p0).
pub fn shoot(k: &Kernel, p0: f64, intervals: usize) -> Result<Shot> {
    let msg = message_interval(k.model())?;
    let h = msg.width() / intervals as f64;
    let u0 = u_star(k, p0)?;
    let (nodes, stiff_at) = integrate(k, msg.lo, [u0, p0], h, intervals);
    if stiff_at.is_some() {
        return Ok(Shot { p0, rule: None, residual: f64::NAN, stiff_at });
    }
    let last = nodes[intervals];
    let residual = k.f_plus(last[0], last[1]);
    Ok(Shot { p0, rule: Some(rule_from_nodes(msg, &nodes)), residual, stiff_at })
}

fn rule_from_nodes(msg: Interval, nodes: &[[f64; 3]]) -> ActionRule {
    let n = nodes.len() - 1;
    let h = msg.width() / n as f64;
    ActionRule::new(
        (0..=n).map(|i| msg.lo + i as f64 * h).collect(),
        nodes.iter().map(|v| v[0]).collect(),
        nodes.iter().map(|v| v[1]).collect(),
        nodes.iter().map(|v| v[2]).collect(),
    )
}

fn default_p_max(m: &ModelSpec, msg: Interval) -> Result<f64> {
    let lo = m.receiver().ideal(m.prior.quantile(1e-3))?;
    let hi = m.receiver().ideal(m.prior.quantile(1.0 - 1e-3))?;
    Ok((4.0 * (hi - lo) / msg.width()).max(1e-3))
}

/// The slope scan covers [p_max·2^-SCAN_DECADES, p_max] geometrically.
const SCAN_DECADES: f64 = 14.0;

/// Scan initial slopes and refine every sign change of F₊ by Brent's method.
fn single_shooting(k: &Kernel, opts: &BvpOptions, p_max: f64, stiff: &mut Vec<f64>) -> Vec<(f64, ActionRule)> {
    let n = opts.slope_grid.max(2);
    let scan: Vec<(f64, f64)> = (1..=n)
        .map(|i| {
            let p0 = p_max * (SCAN_DECADES * (i as f64 / n as f64 - 1.0)).exp2();
            match shoot(k, p0, opts.intervals) {
                Ok(s) => {
                    if let Some(t) = s.stiff_at {
                        stiff.push(t);
                    }
                    (p0, s.residual)
                }
                Err(_) => (p0, f64::NAN),
            }
        })
        .collect();
    let mut out = Vec::new();
    for w in scan.windows(2) {
        let ((p1, f1), (p2, f2)) = (w[0], w[1]);
        if !(f1.is_finite() && f2.is_finite()) || f1.signum() == f2.signum() {
            continue;
        }
        let res = |p: f64| shoot(k, p, opts.intervals).map(|s| s.residual).unwrap_or(f64::NAN);
        let Ok(p0) = find_root(res, Interval { lo: p1, hi: p2 }, 1e-13) else { continue };
        if let Ok(s) = shoot(k, p0, opts.intervals) {
            if let Some(rule) = s.rule {
                if s.residual.abs() <= opts.tol {
                    out.push((p0, rule));
                }
            }
        }
    }
    out
}

/// Starting slope for the global methods: the fixed point of
/// p = (v*(p) - u*(p)) / |M|.
fn chord_slope(k: &Kernel, msg: Interval, p_max: f64) -> Result<f64> {
    let mut p = 0.25 * p_max;
    for _ in 0..40 {
        let next = ((v_star(k, p)? - u_star(k, p)?) / msg.width()).clamp(1e-6, p_max);
        if (next - p).abs() < 1e-9 {
            return Ok(next);
        }
        p = 0.5 * (p + next);
    }
    Ok(p)
}

struct Segments<'k, 'm> {
    k: &'k Kernel<'m>,
    msg: Interval,
    count: usize,
    steps: usize,
    h: f64,
}

impl Segments<'_, '_> {
    fn start(&self, j: usize) -> f64 {
        self.msg.lo + (j * self.steps) as f64 * self.h
    }

    fn propagate(&self, j: usize, y: [f64; 2]) -> Option<[f64; 2]> {
        let mut f = |t: f64, y: &[f64; 2]| match self.k.rhs(t, y[0], y[1]) {
            Ok(g) => [y[1], g],
            Err(_) => [f64::NAN; 2],
        };
        let mut y = y;
        let t0 = self.start(j);
        for i in 0..self.steps {
            y = rk4_step(&mut f, t0 + i as f64 * self.h, &y, self.h);
            if !(y[0].is_finite() && y[1].is_finite()) {
                return None;
            }
        }
        Some(y)
    }

    /// Boundary equations and matching conditions; `None` when a segment
    /// leaves the admissible region.
    fn residual(&self, z: &[f64]) -> Option<(Vec<f64>, Vec<[f64; 2]>)> {
        let n = self.count;
        let mut res = Vec::with_capacity(2 * n);
        res.push(self.k.f_minus(z[0], z[1]));
        let mut ends = Vec::with_capacity(n);
        for j in 0..n {
            let e = self.propagate(j, [z[2 * j], z[2 * j + 1]])?;
            if j + 1 < n {
                res.push(e[0] - z[2 * j + 2]);
                res.push(e[1] - z[2 * j + 3]);
            }
            ends.push(e);
        }
        let e = ends[n - 1];
        res.push(self.k.f_plus(e[0], e[1]));
        if res.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some((res, ends))
    }

    fn jacobian(&self, z: &[f64], ends: &[[f64; 2]]) -> Option<Vec<f64>> {
        let n = self.count;
        let dim = 2 * n;
        let mut jac = vec![0.0; dim * dim];
        let (a0, p0) = (z[0], z[1]);
        let f0 = self.k.f_minus(a0, p0);
        let ha = fd_step(a0);
        let hp = fd_step(p0);
        jac[0] = (self.k.f_minus(a0 + ha, p0) - f0) / ha;
        jac[1] = (self.k.f_minus(a0, p0 + hp) - f0) / hp;
        for j in 0..n {
            let y = [z[2 * j], z[2 * j + 1]];
            for c in 0..2 {
                let mut yp = y;
                let h = fd_step(y[c]);
                yp[c] += h;
                let e = self.propagate(j, yp)?;
                let d = [(e[0] - ends[j][0]) / h, (e[1] - ends[j][1]) / h];
                let col = 2 * j + c;
                if j + 1 < n {
                    let row = 1 + 2 * j;
                    jac[row * dim + col] = d[0];
                    jac[(row + 1) * dim + col] = d[1];
                } else {
                    let row = dim - 1;
                    let fe = self.k.f_plus(ends[j][0], ends[j][1]);
                    let ha = fd_step(ends[j][0]);
                    let hp = fd_step(ends[j][1]);
                    let ga = (self.k.f_plus(ends[j][0] + ha, ends[j][1]) - fe) / ha;
                    let gp = (self.k.f_plus(ends[j][0], ends[j][1] + hp) - fe) / hp;
                    jac[row * dim + col] = ga * d[0] + gp * d[1];
                }
            }
            if j + 1 < n {
                let row = 1 + 2 * j;
                jac[row * dim + 2 * j + 2] = -1.0;
                jac[(row + 1) * dim + 2 * j + 3] = -1.0;
            }
        }
        Some(jac)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Newton iteration on the multiple-shooting system from a straight-line
/// guess with slope `p` through `mid` at the center of the interval.
fn multiple_shooting(k: &Kernel, msg: Interval, opts: &BvpOptions, p: f64, mid: f64) -> Result<(ActionRule, usize)> {
    let count = opts.segments.clamp(1, opts.intervals);
    let steps = opts.intervals / count;
    let seg = Segments { k, msg, count, steps, h: msg.width() / (count * steps) as f64 };
    let mut z: Vec<f64> = (0..count).flat_map(|j| [mid + p * (seg.start(j) - msg.mid()), p]).collect();
    let (mut res, mut ends) = seg
        .residual(&z)
        .ok_or_else(|| Error::NoRegularEquilibrium(format!("initial guess with slope {p:.4} is not admissible")))?;
    for it in 0..opts.max_iter {
        let norm = max_abs(&res);
        if norm <= opts.tol {
            let mut nodes = Vec::with_capacity(opts.intervals + 1);
            for j in 0..count {
                let (seg_nodes, bad) = integrate(k, seg.start(j), [z[2 * j], z[2 * j + 1]], seg.h, steps);
                if let Some(t) = bad {
                    return Err(Error::RegularityViolation { r: t, reason: "segment left the admissible strip".into() });
                }
                let take = if j + 1 < count { steps } else { steps + 1 };
                nodes.extend_from_slice(&seg_nodes[..take]);
            }
            return Ok((rule_from_nodes(msg, &nodes), it));
        }
        let jac = seg
            .jacobian(&z, &ends)
            .ok_or_else(|| Error::NoRegularEquilibrium("Jacobian evaluation left the admissible strip".into()))?;
        let step = solve_dense(jac, res.iter().map(|v| -v).collect())
            .ok_or_else(|| Error::NoRegularEquilibrium("singular multiple-shooting Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            if let Some((r2, e2)) = seg.residual(&trial) {
                if max_abs(&r2) < norm || lambda < 1e-3 {
                    z = trial;
                    res = r2;
                    ends = e2;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                return Err(Error::NoRegularEquilibrium(format!("line search failed at residual {norm:.3e}")));
            }
        }
    }
    Err(Error::NoRegularEquilibrium(format!("multiple shooting did not converge, residual {:.3e}", max_abs(&res))))
}

/// Damped Picard iteration of the Green-operator form: solve a'' = G(r, a, a')
/// with Dirichlet data u*(a'(m̲)), v*(a'(m̄)) and average with the previous
/// iterate.
fn green_picard(k: &Kernel, msg: Interval, opts: &BvpOptions, p: f64, mid: f64) -> Result<(ActionRule, usize)> {
    let n = opts.intervals;
    let h = msg.width() / n as f64;
    let r: Vec<f64> = (0..=n).map(|i| msg.lo + i as f64 * h).collect();
    let mut a: Vec<f64> = r.iter().map(|&t| mid + p * (t - msg.mid())).collect();
    let slopes = |a: &[f64]| -> Vec<f64> {
        (0..=n)
            .map(|i| match i {
                0 => (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * h),
                i if i == n => (3.0 * a[n] - 4.0 * a[n - 1] + a[n - 2]) / (2.0 * h),
                _ => (a[i + 1] - a[i - 1]) / (2.0 * h),
            })
            .collect()
    };
    for it in 0..4 * opts.max_iter {
        let s = slopes(&a);
        let mut g = Vec::with_capacity(n + 1);
        for i in 0..=n {
            if !(s[i] > 0.0) {
                return Err(Error::RegularityViolation { r: r[i], reason: "nonpositive slope".into() });
            }
            g.push(k.rhs(r[i], a[i], s[i])?);
        }
        let (lo, hi) = (u_star(k, s[0])?, v_star(k, s[n])?);
        let m = n - 1;
        let mut rhs: Vec<f64> = (1..n).map(|i| h * h * g[i]).collect();
        rhs[0] -= lo;
        rhs[m - 1] -= hi;
        let inner = solve_tridiagonal(&vec![1.0; m], &vec![-2.0; m], &vec![1.0; m], &rhs);
        let mut next = Vec::with_capacity(n + 1);
        next.push(lo);
        next.extend(inner);
        next.push(hi);
        let change = max_abs(&a.iter().zip(&next).map(|(x, y)| x - y).collect::<Vec<_>>());
        if !change.is_finite() {
            break;
        }
        for (x, y) in a.iter_mut().zip(&next) {
            *x = 0.5 * *x + 0.5 * y;
        }
        if change < opts.tol {
            let s = slopes(&a);
            let g: Vec<f64> = (0..=n).map(|i| k.rhs(r[i], a[i], s[i]).unwrap_or(f64::NAN)).collect();
            return Ok((ActionRule::new(r, a, s, g), it));
        }
    }
    Err(Error::NoRegularEquilibrium("Green-form iteration did not converge".into()))
}

/// Largest normalized Bayes residual over 32 interior reports spread across
/// the central 90% of the message interval.
pub fn bayes_residual_max(k: &Kernel, rule: &ActionRule) -> Result<f64> {
    let n = rule.r.len() - 1;
    let i0 = ((n as f64 * 0.05).ceil() as usize).max(2);
    let i1 = ((n as f64 * 0.95).floor() as usize).min(n - 2);
    let mut worst = 0.0_f64;
    for j in 0..32 {
        let i = i0 + (j * (i1 - i0)) / 31;
        worst = worst.max(k.bayes_residual(rule, i)?.abs());
    }
    Ok(worst)
}

fn same_rule(a: &ActionRule, b: &ActionRule) -> bool {
    a.a.len() == b.a.len() && a.a.iter().zip(&b.a).all(|(x, y)| (x - y).abs() < 1e-5)
}

/// Regular equilibrium on a compact message interval. Every boundary-
/// compatible solution found is ranked by expected report-anchor cost and the
/// cheapest one is returned.
pub fn solve_bvp(m: &ModelSpec, opts: &BvpOptions) -> Result<BvpSolution> {
    m.check()?;
    let msg = message_interval(m)?;
    let k = Kernel::new(m);
    let p_max = match opts.p_max {
        Some(p) => p,
        None => default_p_max(m, msg)?,
    };
    let mut stiff = Vec::new();
    let mut notes = Vec::new();
    let mut found: Vec<(Method, ActionRule, usize)> = single_shooting(&k, opts, p_max, &mut stiff)
        .into_iter()
        .map(|(_, rule)| (Method::SingleShooting, rule, 0))
        .collect();
    if found.is_empty() {
        notes.push("single shooting found no sign change of the upper boundary equation".into());
        let start = chord_slope(&k, msg, p_max).and_then(|p| Ok((p, 0.5 * (u_star(&k, p)? + v_star(&k, p)?))));
        let (p, mid) = match start {
            Ok(v) => v,
            Err(e) => {
                notes.push(format!("no starting slope for the global solvers: {e}"));
                return Err(Error::NoRegularEquilibrium(notes.join("; ")));
            }
        };
        for scale in [1.0, 0.5] {
            match multiple_shooting(&k, msg, opts, p * scale, mid) {
                Ok((rule, it)) => {
                    if !found.iter().any(|(_, r, _)| same_rule(r, &rule)) {
                        found.push((Method::MultipleShooting, rule, it));
                    }
                }
                Err(e) => notes.push(format!("multiple shooting from slope {:.4}: {e}", p * scale)),
            }
        }
        if found.is_empty() {
            match green_picard(&k, msg, opts, p, mid) {
                Ok((rule, it)) => found.push((Method::GreenPicard, rule, it)),
                Err(e) => notes.push(format!("Green-form iteration: {e}")),
            }
        }
    }
    // a candidate whose posterior is not regular is not an equilibrium
    let mut kept = Vec::with_capacity(found.len());
    for (method, rule, it) in found {
        match bayes_residual_max(&k, &rule).and_then(|b| Ok((b, communication_cost(&rule, m)?))) {
            Ok((bayes, cost)) => kept.push((method, rule, it, bayes, cost)),
            Err(e) => notes.push(format!("{method:?} candidate rejected: {e}")),
        }
    }
    if kept.is_empty() {
        return Err(Error::NoRegularEquilibrium(notes.join("; ")));
    }
    let candidates: Vec<Candidate> = kept
        .iter()
        .map(|(method, rule, _, _, cost)| {
            let n = rule.r.len() - 1;
            Candidate {
                method: *method,
                p0: rule.a1[0],
                f_minus: k.f_minus(rule.a[0], rule.a1[0]),
                f_plus: k.f_plus(rule.a[n], rule.a1[n]),
                communication_cost: *cost,
            }
        })
        .collect();
    let selected = (0..candidates.len())
        .min_by(|&i, &j| candidates[i].communication_cost.total_cmp(&candidates[j].communication_cost))
        .unwrap_or(0);
    let (method, rule, iterations, bayes, _) = kept.swap_remove(selected);
    let min_slope = rule.a1.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BvpSolution {
        rule,
        telemetry: Telemetry {
            message_interval: msg,
            method,
            candidates,
            selected,
            stiff_points: stiff,
            iterations,
            bayes_residual_max: bayes,
            min_slope,
            notes,
        },
    })
}

/// One truncation level of a whole-line solve.
#[derive(Debug, Clone, Serialize)]
pub struct WholeLineStep {
    pub half_width: f64,
    pub message_interval: Interval,
    /// Report where the inward trajectories were joined, and the window
    /// over which they were blended.
    pub splice: f64,
    pub blend: Interval,
    /// |Δa| + spread·|Δa'| between the two trajectories at the splice.
    pub mismatch: f64,
    /// Max change of the rule on the central report window from the previous
    /// level; NaN for the first.
    pub central_change: f64,
    /// NaN when a sampled posterior has a nonpositive Jacobian.
    pub bayes_residual_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WholeLineSolution {
    pub rule: ActionRule,
    pub steps: Vec<WholeLineStep>,
}

/// Zero-curvature action at report `r` for slope `p`: root of ℬ in a.
fn flat_action(k: &Kernel, r: f64, p: f64) -> Result<f64> {
    boundary_root(k, |a| k.coefficients(r, a, p).b)
}

/// Start for inward integration at report `r`: the slope p that reproduces
/// itself as the r-derivative of the zero-curvature action, with that action.
fn slow_start(k: &Kernel, r: f64, h: f64, p_guess: f64) -> Result<[f64; 2]> {
    let drift = |p: f64| -> f64 {
        let up = flat_action(k, r + h, p);
        let dn = flat_action(k, r - h, p);
        match (up, dn) {
            (Ok(u), Ok(d)) => ((u - d) / (2.0 * h)).max(1e-300).ln() - p.ln(),
            _ => f64::NAN,
        }
    };
    let lp = find_root(|x| drift(x.exp()), expand_bracket(|x| drift(x.exp()), p_guess.ln(), 1.0, Interval { lo: -40.0, hi: 5.0 })?, 1e-10)?;
    let p = lp.exp();
    Ok([flat_action(k, r, p)?, p])
}

/// Marginal location and spread of the anchor.
fn anchor_spread(m: &ModelSpec) -> (f64, f64) {
    let center = m.anchor.mean(m.prior.mean());
    let slope = m.anchor.b0.derivative(m.prior.mean());
    let spread = (slope * slope * m.prior.variance() + (m.anchor.sigma * m.anchor.noise.scale()).powi(2)).sqrt();
    (center, spread)
}

/// Whole-line regular equilibrium. Away from the middle of the report
/// distribution, deviations from the equilibrium rule grow outward, so
/// trajectories started at either end of [center ± L·spread] contract onto
/// it when integrated inward. The two inward trajectories are joined where
/// they agree best and blended smoothly; outside the Gaussian-quadratic case
/// the two need not meet exactly, and the Bayes residual inside the blend
/// window measures the approximation. Each L in `half_widths` is solved and the change of the
/// central rule between successive levels is reported; the last level is
/// returned.
pub fn solve_whole_line(m: &ModelSpec, half_widths: &[f64], opts: &BvpOptions) -> Result<WholeLineSolution> {
    m.check()?;
    let k = Kernel::new(m);
    let (center, spread) = anchor_spread(m);
    let window = Interval { lo: center - spread, hi: center + spread };
    let mut steps = Vec::new();
    let mut last: Option<ActionRule> = None;
    for &l in half_widths {
        let msg = Interval::new(center - l * spread, center + l * spread)?;
        let p0 = initial_slope(m)?;
        let n = whole_line_intervals(&k, center, p0, msg, opts.intervals);
        let h = msg.width() / n as f64;
        let fwd = integrate(&k, msg.lo, slow_start(&k, msg.lo, h, p0)?, h, n).0;
        let bwd = integrate(&k, msg.hi, slow_start(&k, msg.hi, h, p0)?, -h, n).0;
        // fwd[i] sits at node i, bwd[j] at node n - j
        let overlap_lo = n + 1 - bwd.len();
        let overlap_hi = fwd.len().min(n + 1);
        if overlap_lo >= overlap_hi {
            return Err(Error::NoRegularEquilibrium(format!(
                "inward trajectories on {msg:?} do not overlap (forward reached node {}, backward node {overlap_lo})",
                fwd.len()
            )));
        }
        let gap = |i: usize| {
            let (f, b) = (fwd[i], bwd[n - i]);
            (f[0] - b[0]).abs() + spread * (f[1] - b[1]).abs()
        };
        let splice = (overlap_lo..overlap_hi).min_by(|&i, &j| gap(i).total_cmp(&gap(j))).unwrap();
        // blend over ±half_blend nodes around the splice with a quintic smoothstep
        let half_blend = ((0.25 * spread / h).round() as usize).max(2);
        let b0 = splice.saturating_sub(half_blend).max(overlap_lo);
        let b1 = (splice + half_blend).min(overlap_hi - 1);
        let nodes: Vec<[f64; 3]> = (0..=n)
            .map(|i| {
                if i <= b0 || b1 <= b0 {
                    if i <= splice { fwd[i] } else { bwd[n - i] }
                } else if i >= b1 {
                    bwd[n - i]
                } else {
                    let w = (b1 - b0) as f64 * h;
                    let t = (i - b0) as f64 / (b1 - b0) as f64;
                    let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
                    let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
                    let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w);
                    let (f, b) = (fwd[i], bwd[n - i]);
                    let d = [b[0] - f[0], b[1] - f[1], b[2] - f[2]];
                    [
                        f[0] + s * d[0],
                        f[1] + s * d[1] + ds * d[0],
                        f[2] + s * d[2] + 2.0 * ds * d[1] + dds * d[0],
                    ]
                }
            })
            .collect();
        let rule = rule_from_nodes(msg, &nodes);
        let change = match &last {
            None => f64::NAN,
            Some(prev) => (0..=50)
                .map(|i| window.lo + window.width() * i as f64 / 50.0)
                .map(|r| (prev.eval3(r).0 - rule.eval3(r).0).abs())
                .fold(0.0, f64::max),
        };
        steps.push(WholeLineStep {
            half_width: l,
            message_interval: msg,
            splice: rule.r[splice],
            blend: Interval { lo: rule.r[b0], hi: rule.r[b1] },
            mismatch: gap(splice),
            central_change: change,
            bayes_residual_max: bayes_residual_max(&k, &rule).unwrap_or(f64::NAN),
        });
        last = Some(rule);
    }
    let rule = last.ok_or_else(|| Error::NoRegularEquilibrium("no truncation levels given".into()))?;
    Ok(WholeLineSolution { rule, steps })
}

const MAX_WHOLE_LINE_INTERVALS: usize = 200_000;

/// Explicit steps must stay below the length over which off-manifold
/// deviations relax, sqrt(𝒜 / |∂ℬ/∂a|); narrow priors make it short.
fn whole_line_intervals(k: &Kernel, center: f64, p: f64, msg: Interval, base: usize) -> usize {
    let Ok(a) = flat_action(k, center, p) else {
        return base;
    };
    let da = 1e-6 * k.model().prior.natural_scale();
    let co = k.coefficients(center, a, p);
    let b_a = (k.coefficients(center, a + da, p).b - k.coefficients(center, a - da, p).b) / (2.0 * da);
    let len = (co.a / b_a.abs()).sqrt();
    if !(len > 0.0) {
        return base;
    }
    base.max((msg.width() / len).ceil() as usize).min(MAX_WHOLE_LINE_INTERVALS)
}

/// Slope of the receiver's regression of a^R(θ) on the anchor; only a
/// starting value, the inward integration forgets it.
fn initial_slope(m: &ModelSpec) -> Result<f64> {
    let th = m.prior.mean();
    let sd = m.prior.variance().sqrt();
    let ar = (m.receiver().ideal(th + 0.5 * sd)? - m.receiver().ideal(th - 0.5 * sd)?) / sd;
    let (_, spread) = anchor_spread(m);
    let b1 = m.anchor.b0.derivative(th);
    Ok((ar * b1 * m.prior.variance() / (spread * spread)).max(1e-3))
}
