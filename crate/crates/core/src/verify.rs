//! Brute-force and Monte Carlo checks of candidate equilibria: sender
//! optimality, Bayes consistency, welfare, connected report images, tail
//! reversion and endpoint pooling.

use crate::equilibrium::{best_response, report_gradient, ActionFn, Kernel};
use crate::model::{rule_on, ModelSpec, Noise};
use crate::numerics::{golden_section_max, normal_pdf, Interval, RngStream};
use crate::Result;
use rayon::prelude::*;
use serde::Serialize;

/// Half-width K of the report window around b: moving the report further
/// costs more than the largest available action gain.
pub fn dominance_bound(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, b: f64) -> f64 {
    let us = m.sender();
    let ideal = us.ideal(theta).unwrap_or(rule.value(b));
    let gain = (us.value(ideal, theta) - us.value(rule.value(b), theta)).max(0.0);
    if gain == 0.0 {
        return 0.0;
    }
    let cost = |k: f64| m.cost.c * m.cost.shape.phi(k).min(m.cost.shape.phi(-k));
    let mut hi = 1.0;
    while cost(hi) < gain && hi < 1e8 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cost(mid) < gain {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

const GRID_RESOLUTION: f64 = 1e-4;
const GOLDEN_TOL: f64 = 1e-8;

fn sender_objective(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, b: f64, r: f64) -> f64 {
    m.sender().value(rule.value(r), theta) - m.cost.value(r - b)
}

/// Sender optimum by exhaustive grid search over [b - K, b + K] at spacing
/// 1e-4·K, refined by golden-section search.
pub fn sender_best_response(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, b: f64) -> f64 {
    grid_best_response(rule, m, theta, b, (2.0 / GRID_RESOLUTION).round() as usize)
}

/// Same search with `n` grid intervals over the window.
pub fn grid_best_response(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, b: f64, n: usize) -> f64 {
    let k = dominance_bound(rule, m, theta, b);
    let mut window = Interval { lo: b - k, hi: b + k };
    if let Some(msg) = rule.domain().or(m.message_space.interval()) {
        let lo = window.lo.max(msg.lo).min(msg.hi);
        let hi = window.hi.min(msg.hi).max(msg.lo);
        window = Interval { lo, hi };
    }
    if window.hi <= window.lo {
        return window.lo;
    }
    let obj = |r: f64| sender_objective(rule, m, theta, b, r);
    let step = window.width() / n as f64;
    let (mut best, mut best_v) = (window.lo, f64::NEG_INFINITY);
    for i in 0..=n {
        let r = window.lo + i as f64 * step;
        let v = obj(r);
        if v > best_v {
            best = r;
            best_v = v;
        }
    }
    let lo = (best - step).max(window.lo);
    let hi = (best + step).min(window.hi);
    let (r, v) = golden_section_max(obj, lo, hi, GOLDEN_TOL * (1.0 + best.abs()));
    let (r, v) = if v >= best_v { (r, v) } else { (best, best_v) };
    // the anchor itself is always a candidate
    if window.contains(b) && obj(b) >= v {
        b
    } else {
        r
    }
}

/// Best response used for sampling: first-order root for smooth rules,
/// brute force otherwise.
pub fn respond(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, b: f64) -> f64 {
    if rule.smooth() {
        best_response(rule, m, theta, b)
    } else {
        sender_best_response(rule, m, theta, b)
    }
}

/// ∂R/∂b from implicit differentiation of the sender's first-order condition.
fn report_sensitivity(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, b: f64, r: f64) -> f64 {
    if let Some(msg) = rule.domain().or(m.message_space.interval()) {
        if r <= msg.lo || r >= msg.hi {
            return 0.0;
        }
    }
    let (a, p, a2) = (rule.value(r), rule.slope(r), rule.curvature(r));
    let k = m.cost.c * m.cost.shape.d2phi(r - b);
    let us = m.sender();
    let inner = us.d11(a, theta) * p * p + us.d1(a, theta) * a2;
    k / (k - inner)
}

#[derive(Debug, Clone, Serialize)]
pub struct NoHoles {
    pub pass: bool,
    pub max_gap: f64,
    /// Largest gap divided by the spacing predicted from ∂R/∂b.
    pub max_ratio: f64,
    /// Anchor value below the worst gap.
    pub witness_b: f64,
}

const HOLE_FACTOR: f64 = 5.0;

/// Connectedness of {R(θ, b)} at grid scale: every gap between successive
/// images must be within a factor 5 of the local spacing predicted by ∂R/∂b.
pub fn no_holes_check(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, b_grid: &[f64]) -> NoHoles {
    let rs: Vec<f64> = b_grid.iter().map(|&b| respond(rule, m, theta, b)).collect();
    let mut out = NoHoles { pass: true, max_gap: 0.0, max_ratio: 0.0, witness_b: f64::NAN };
    for j in 0..b_grid.len().saturating_sub(1) {
        let db = b_grid[j + 1] - b_grid[j];
        let gap = (rs[j + 1] - rs[j]).abs();
        let s0 = report_sensitivity(rule, m, theta, b_grid[j], rs[j]).abs();
        let s1 = report_sensitivity(rule, m, theta, b_grid[j + 1], rs[j + 1]).abs();
        let predicted = s0.max(s1) * db;
        let ratio = if gap <= 1e-12 { 0.0 } else { gap / predicted.max(1e-300) };
        if gap > out.max_gap {
            out.max_gap = gap;
        }
        if ratio > out.max_ratio {
            out.max_ratio = ratio;
            out.witness_b = b_grid[j];
        }
    }
    out.pass = out.max_ratio <= HOLE_FACTOR;
    out
}

/// Anchor grid of `n` points spanning ±6 noise sd around b₀(θ).
pub fn anchor_grid(m: &ModelSpec, theta: f64, n: usize) -> Vec<f64> {
    let c = m.anchor.mean(theta);
    let w = 6.0 * m.anchor.sigma * m.anchor.noise.scale();
    (0..n).map(|i| c - w + 2.0 * w * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Reversion {
    /// False when the rule's action is unbounded, where the tail property is
    /// not implied and the check is skipped.
    pub applicable: bool,
    pub pass: bool,
    pub b: Vec<f64>,
    pub distortion: Vec<f64>,
}

/// |R(θ, b) - b| along anchors ordered by |b|: must fall from the first to
/// the last sample and end below 1e-3 of the first, without increasing
/// along the way by more than 1e-9.
pub fn reversion_check(rule: &dyn ActionFn, m: &ModelSpec, theta: f64, extreme_b: &[f64]) -> Reversion {
    let mut b = extreme_b.to_vec();
    b.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let distortion: Vec<f64> = b.iter().map(|&x| (respond(rule, m, theta, x) - x).abs()).collect();
    let applicable = rule.bounded() && m.message_space.interval().is_none();
    let pass = if applicable {
        let first = distortion.first().copied().unwrap_or(0.0);
        let last = distortion.last().copied().unwrap_or(0.0);
        let mono = distortion.windows(2).all(|w| w[1] <= w[0] + 1e-9);
        mono && last <= 1e-3 * first.max(1e-12)
    } else {
        true
    };
    Reversion { applicable, pass, b, distortion }
}

/// Mean and standard error.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    fn from_sums(n: f64, s: f64, s2: f64) -> Self {
        let mean = s / n;
        let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
        Estimate { mean, se: (var / n).sqrt() }
    }

    /// |mean - target| / se
    pub fn z(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.se.max(1e-300)
    }
}

/// Number of independent sampling chunks; fixed so that results do not
/// depend on the worker count.
pub const CHUNKS: u64 = 64;

struct Draw {
    theta: f64,
    b: f64,
}

fn draw(m: &ModelSpec, u_theta: f64, u_noise: f64) -> Draw {
    let theta = m.prior.quantile(u_theta);
    let x = m.anchor.noise.quantile(u_noise.clamp(1e-300, 1.0 - 1e-16));
    Draw { theta, b: m.anchor.mean(theta) + m.anchor.sigma * x }
}

fn chunk_sizes(n: usize) -> Vec<usize> {
    let k = CHUNKS as usize;
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct WelfareMc {
    pub w_r: Estimate,
    pub w_s: Estimate,
    pub cost: Estimate,
    pub samples: usize,
}

/// Welfare by Monte Carlo with antithetic pairs (u, 1 - u) in both the state
/// and the anchor noise; standard errors are over pair means.
pub fn welfare_mc(rule: &dyn ActionFn, m: &ModelSpec, n: usize, seed: u64) -> WelfareMc {
    let pairs = n.div_ceil(2);
    let sums: Vec<[f64; 6]> = chunk_sizes(pairs)
        .into_par_iter()
        .enumerate()
        .map(|(id, size)| {
            let mut rng = RngStream::new(seed, id as u64);
            let mut acc = [0.0; 6];
            for _ in 0..size {
                let (u1, u2) = (rng.uniform(), rng.uniform());
                let mut v = [0.0; 3];
                for (ua, ub) in [(u1, u2), (1.0 - u1, 1.0 - u2)] {
                    let d = draw(m, ua, ub);
                    let r = respond(rule, m, d.theta, d.b);
                    let a = rule.value(r);
                    let cost = m.cost.value(r - d.b);
                    v[0] += 0.5 * m.receiver().value(a, d.theta);
                    v[1] += 0.5 * (m.sender().value(a, d.theta) - cost);
                    v[2] += 0.5 * cost;
                }
                for k in 0..3 {
                    acc[2 * k] += v[k];
                    acc[2 * k + 1] += v[k] * v[k];
                }
            }
            acc
        })
        .collect();
    let mut tot = [0.0; 6];
    for s in &sums {
        for k in 0..6 {
            tot[k] += s[k];
        }
    }
    let np = pairs as f64;
    WelfareMc {
        w_r: Estimate::from_sums(np, tot[0], tot[1]),
        w_s: Estimate::from_sums(np, tot[2], tot[3]),
        cost: Estimate::from_sums(np, tot[4], tot[5]),
        samples: 2 * pairs,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BinRow {
    pub r_lo: f64,
    pub r_hi: f64,
    pub n: usize,
    pub mean_theta: f64,
    pub mean_action: f64,
    /// Mean of U^R₁(a(R), θ) in the bin with its standard error.
    pub residual: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BayesConsistency {
    /// Largest |bin residual| in standard errors.
    pub max_z: f64,
    pub bins: Vec<BinRow>,
}

impl BayesConsistency {
    pub fn csv(&self) -> String {
        let mut s = String::from("r_lo,r_hi,n,mean_theta,mean_action,residual,se,z\n");
        for b in &self.bins {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                b.r_lo, b.r_hi, b.n, b.mean_theta, b.mean_action, b.residual, b.se, b.z
            ));
        }
        s
    }
}

/// Simulates (θ, b), lets the sender best respond, sorts by report into
/// equal-count bins and tests E[U^R₁(a(R), θ) | bin] = 0. Reports pooled at
/// a message endpoint form their own bin.
pub fn bayes_consistency(rule: &dyn ActionFn, m: &ModelSpec, n: usize, n_bins: usize, seed: u64) -> BayesConsistency {
    let mut rows: Vec<(f64, f64, f64, f64)> = chunk_sizes(n)
        .into_par_iter()
        .enumerate()
        .flat_map_iter(|(id, size)| {
            let mut rng = RngStream::new(seed, CHUNKS + id as u64);
            (0..size)
                .map(|_| {
                    let d = draw(m, rng.uniform(), rng.uniform());
                    let r = respond(rule, m, d.theta, d.b);
                    let a = rule.value(r);
                    (r, d.theta, a, m.receiver().d1(a, d.theta))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    rows.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut bins = Vec::with_capacity(n_bins);
    let per = (rows.len() / n_bins.max(1)).max(2);
    let mut start = 0;
    while start < rows.len() {
        let mut end = (start + per).min(rows.len());
        if rows.len() - end < per / 2 {
            end = rows.len();
        }
        // never split a tie (pooled reports)
        while end < rows.len() && rows[end].0 == rows[end - 1].0 {
            end += 1;
        }
        let chunk = &rows[start..end];
        let k = chunk.len() as f64;
        let (mut s, mut s2, mut st, mut sa) = (0.0, 0.0, 0.0, 0.0);
        for &(_, th, a, g) in chunk {
            s += g;
            s2 += g * g;
            st += th;
            sa += a;
        }
        let est = if chunk.len() > 1 { Estimate::from_sums(k, s, s2) } else { Estimate { mean: s, se: f64::INFINITY } };
        bins.push(BinRow {
            r_lo: chunk[0].0,
            r_hi: chunk[chunk.len() - 1].0,
            n: chunk.len(),
            mean_theta: st / k,
            mean_action: sa / k,
            residual: est.mean,
            se: est.se,
            z: if est.se > 0.0 { est.mean.abs() / est.se } else if est.mean == 0.0 { 0.0 } else { f64::INFINITY },
        });
        start = end;
    }
    let max_z = bins.iter().map(|b| b.z).fold(0.0, f64::max);
    BayesConsistency { max_z, bins }
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointMass {
    pub model: f64,
    pub mc: Estimate,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoolingCheck {
    pub lower: EndpointMass,
    pub upper: EndpointMass,
}

/// Endpoint pooling probabilities from the boundary-tail formula against a
/// Monte Carlo estimate. States are integrated on the prior quadrature nodes;
/// at each node the anchor noise is drawn from a Gaussian proposal centred
/// on the pooling threshold and reweighted by h(x)/φ(x - μ), and the report
/// comes from the brute-force best response.
const POOLING_GRID: usize = 2000;

pub fn pooling_check(rule: &dyn ActionFn, m: &ModelSpec, per_node: usize, seed: u64) -> Result<Option<PoolingCheck>> {
    let Some(msg) = m.message_space.interval() else {
        return Ok(None);
    };
    let kernel = Kernel::new(m);
    let (lo_model, hi_model) = kernel.pooling_masses(rule);
    let quad = rule_on(m.prior.support(), m.prior.natural_scale(), None);
    let nodes: Vec<(f64, f64)> = quad.x.iter().copied().zip(quad.w.iter().copied()).collect();
    let per_node_est: Vec<[f64; 4]> = nodes
        .par_iter()
        .enumerate()
        .map(|(id, &(th, w))| {
            let wf = w * m.prior.density(th);
            if wf == 0.0 {
                return [0.0; 4];
            }
            let mut rng = RngStream::new(seed, 2 * CHUNKS + id as u64);
            let mut out = [0.0; 4];
            for (side, end) in [(0, msg.lo), (1, msg.hi)] {
                // threshold anchor: the report at the endpoint is exactly optimal
                let (a, p) = (rule.value(end), rule.slope(end));
                let s = m.sender().d1(a, th) * p / m.cost.c;
                let mu = (end - m.cost.shape.psi(s) - m.anchor.mean(th)) / m.anchor.sigma;
                let (mut acc, mut acc2) = (0.0, 0.0);
                for _ in 0..per_node {
                    let x = mu + rng.normal();
                    let wt = match m.anchor.noise {
                        Noise::Gaussian => (-mu * x + 0.5 * mu * mu).exp(),
                        _ => m.anchor.noise.pdf(x) / normal_pdf(x - mu),
                    };
                    let b = m.anchor.mean(th) + m.anchor.sigma * x;
                    let r = grid_best_response(rule, m, th, b, POOLING_GRID);
                    let tol = 1e-7 * (1.0 + end.abs());
                    let hit = if side == 0 { r <= msg.lo + tol } else { r >= msg.hi - tol };
                    let v = if hit { wt } else { 0.0 };
                    acc += v;
                    acc2 += v * v;
                }
                let k = per_node as f64;
                let mean = acc / k;
                let var = ((acc2 / k - mean * mean) * k / (k - 1.0)).max(0.0) / k;
                out[2 * side] = wf * mean;
                out[2 * side + 1] = wf * wf * var;
            }
            out
        })
        .collect();
    let mut tot = [0.0; 4];
    for e in &per_node_est {
        for k in 0..4 {
            tot[k] += e[k];
        }
    }
    let mk = |model: f64, mean: f64, var: f64| {
        let mc = Estimate { mean, se: var.sqrt() };
        EndpointMass { model, mc, z: mc.z(model) }
    };
    Ok(Some(PoolingCheck { lower: mk(lo_model, tot[0], tot[1]), upper: mk(hi_model, tot[2], tot[3]) }))
}

/// Brute-force sender optima at sampled (θ, b) pairs compared with the
/// first-order best response.
#[derive(Debug, Clone, Serialize)]
pub struct SenderCheck {
    /// Largest |R_brute - R_foc|.
    pub best_response_gap: f64,
    /// Largest |∂/∂r objective| at interior brute-force optima.
    pub foc_residual_max: f64,
    /// Interior optima where the objective is not strictly concave.
    pub soc_violations: usize,
    pub points: usize,
}

pub fn sender_check(rule: &dyn ActionFn, m: &ModelSpec, points: usize, seed: u64) -> SenderCheck {
    let mut rng = RngStream::new(seed, 3 * CHUNKS);
    let draws: Vec<Draw> = (0..points).map(|_| draw(m, rng.uniform(), rng.uniform())).collect();
    let res: Vec<(f64, f64, bool)> = draws
        .par_iter()
        .map(|d| {
            let rb = sender_best_response(rule, m, d.theta, d.b);
            let rf = best_response(rule, m, d.theta, d.b);
            let interior = match rule.domain().or(m.message_space.interval()) {
                Some(iv) => rb > iv.lo + 1e-7 && rb < iv.hi - 1e-7,
                None => true,
            };
            let (foc, soc_bad) = if interior {
                let (a, p, a2) = (rule.value(rb), rule.slope(rb), rule.curvature(rb));
                let us = m.sender();
                let soc = us.d11(a, d.theta) * p * p + us.d1(a, d.theta) * a2 - m.cost.c * m.cost.shape.d2phi(rb - d.b);
                (report_gradient(rule, m, d.theta, d.b, rb).abs(), !(soc < 0.0))
            } else {
                (0.0, false)
            };
            ((rb - rf).abs(), foc, soc_bad)
        })
        .collect();
    SenderCheck {
        best_response_gap: res.iter().map(|r| r.0).fold(0.0, f64::max),
        foc_residual_max: res.iter().map(|r| r.1).fold(0.0, f64::max),
        soc_violations: res.iter().filter(|r| r.2).count(),
        points,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOptions {
    pub samples: usize,
    pub bins: usize,
    pub seed: u64,
    pub sender_points: usize,
    pub hole_grid: usize,
    pub pooling_per_node: usize,
    /// Closed-form (W_R, W_S) to test the Monte Carlo welfare against.
    pub welfare_reference: Option<(f64, f64)>,
}

impl VerifyOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        VerifyOptions {
            samples,
            bins: 50,
            seed,
            sender_points: 200,
            hole_grid: 2001,
            pooling_per_node: 400,
            welfare_reference: None,
        }
    }
}

/// Band, in standard errors, for the Monte Carlo comparisons.
pub const Z_BAND: f64 = 4.0;
/// Pooling masses are compared at the tighter three-standard-error band.
pub const POOLING_BAND: f64 = 3.0;
pub const BEST_RESPONSE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub seed: u64,
    pub samples: usize,
    pub sender: SenderCheck,
    pub foc_residual_max: f64,
    pub posterior_mean_gap: f64,
    pub welfare: WelfareMc,
    pub welfare_z: Option<(f64, f64)>,
    pub no_holes: Vec<(f64, NoHoles)>,
    pub no_holes_pass: bool,
    pub reversion: Option<Reversion>,
    pub reversion_pass: bool,
    pub pooling: Option<PoolingCheck>,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub bayes: BayesConsistency,
}

impl Diagnostics {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every check on `rule`.
pub fn diagnose(rule: &dyn ActionFn, m: &ModelSpec, o: &VerifyOptions) -> Result<Diagnostics> {
    let mut failures = Vec::new();
    let sender = sender_check(rule, m, o.sender_points, o.seed);
    if sender.best_response_gap > BEST_RESPONSE_TOL {
        failures.push(format!("best response gap {:.3e}", sender.best_response_gap));
    }
    if sender.soc_violations > 0 {
        failures.push(format!("{} second-order violations", sender.soc_violations));
    }
    let bayes = bayes_consistency(rule, m, o.samples, o.bins, o.seed);
    if !(bayes.max_z < Z_BAND) {
        failures.push(format!("Bayes consistency gap {:.2} se", bayes.max_z));
    }
    let welfare = welfare_mc(rule, m, o.samples, o.seed);
    let welfare_z = o.welfare_reference.map(|(wr, ws)| (welfare.w_r.z(wr), welfare.w_s.z(ws)));
    if let Some((zr, zs)) = welfare_z {
        if !(zr < Z_BAND && zs < Z_BAND) {
            failures.push(format!("welfare off the reference by ({zr:.2}, {zs:.2}) se"));
        }
    }
    let sd = m.prior.variance().sqrt();
    let mean = m.prior.mean();
    let states = [mean - sd, mean, mean + sd];
    let no_holes: Vec<(f64, NoHoles)> =
        states.iter().map(|&t| (t, no_holes_check(rule, m, t, &anchor_grid(m, t, o.hole_grid)))).collect();
    let no_holes_pass = no_holes.iter().all(|(_, h)| h.pass);
    if !no_holes_pass {
        failures.push("report image has a hole".into());
    }
    let reversion = m.message_space.interval().is_none().then(|| {
        let s = m.anchor.sigma * m.anchor.noise.scale();
        let c = m.anchor.mean(mean);
        let bs: Vec<f64> = (0..8).map(|k| c + s * 10.0 * 2f64.powi(k)).collect();
        reversion_check(rule, m, mean, &bs)
    });
    let reversion_pass = reversion.as_ref().is_none_or(|r| r.pass);
    if !reversion_pass {
        failures.push("distortion does not revert in the tail".into());
    }
    let pooling = pooling_check(rule, m, o.pooling_per_node, o.seed)?;
    if let Some(p) = &pooling {
        for (name, e) in [("lower", &p.lower), ("upper", &p.upper)] {
            if !(e.z < POOLING_BAND) {
                failures.push(format!("{name} pooling mass {:.3e} vs model {:.3e}", e.mc.mean, e.model));
            }
        }
    }
    Ok(Diagnostics {
        seed: o.seed,
        samples: o.samples,
        foc_residual_max: sender.foc_residual_max,
        sender,
        posterior_mean_gap: bayes.max_z,
        welfare,
        welfare_z,
        no_holes,
        no_holes_pass,
        reversion,
        reversion_pass,
        pooling,
        failures,
        bayes,
    })
}
