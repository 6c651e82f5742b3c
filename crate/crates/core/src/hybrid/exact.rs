//! Exact hybrids for a fixed number of labels: the sender picks a label
//! before seeing the anchor, then sends an anchored report that the receiver
//! reads under the label's truncated prior.

use crate::cheap_talk::{solve_partition_general, Partition};
use crate::equilibrium::{best_response, solve_bvp, solve_whole_line, ActionFn, ActionRule, BvpOptions, LinearRule};
use crate::gauss;
use crate::model::{rule_on, MessageSpace, ModelSpec};
use crate::numerics::{find_root, solve_tridiagonal, Interval, QuadRule, SampledFunction};
use crate::verify::grid_best_response;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Anchored continuation inside one label.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Continuation {
    Linear(LinearRule),
    Grid(ActionRule),
}

impl Continuation {
    pub fn rule(&self) -> &dyn ActionFn {
        match self {
            Continuation::Linear(r) => r,
            Continuation::Grid(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridOptions {
    pub bvp: BvpOptions,
    /// Truncation levels for whole-line continuations, in anchor spreads.
    pub half_widths: Vec<f64>,
    /// Stop when no cutoff moves by more than this.
    pub tol: f64,
    pub damping: f64,
    /// Damped sweeps before switching to Newton steps.
    pub damped_iter: usize,
    pub newton_iter: usize,
    /// Grid points for the tabulated label values.
    pub label_nodes: usize,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions {
            bvp: BvpOptions::default(),
            half_widths: vec![8.0],
            tol: 1e-7,
            damping: 0.5,
            damped_iter: 30,
            newton_iter: 30,
            label_nodes: 201,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridWelfare {
    pub w_r: f64,
    /// Net of the reporting cost.
    pub w_s: f64,
    /// Losses against each player's state-by-state ideal action.
    pub loss_r: f64,
    pub loss_s: f64,
    /// Sender loss from the receiver's action alone.
    pub mismatch_s: f64,
    pub reporting_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HybridEquilibrium {
    /// Cutoffs with the expected action in each label.
    pub partition: Partition,
    pub cell_continuations: Vec<Continuation>,
    /// Splice mismatch of each whole-line continuation (0 otherwise).
    pub continuation_mismatch: Vec<f64>,
    pub label_values: Vec<SampledFunction>,
    /// |V̄_k(t_k) − V̄_{k−1}(t_k)| at interior cutoffs.
    pub indifference: Vec<f64>,
    pub iterations: usize,
    pub newton_steps: usize,
    pub welfare: HybridWelfare,
}

impl HybridEquilibrium {
    /// E_b[a_k(r*(θ, b))] for the label k containing θ.
    pub fn expected_action(&self, m: &ModelSpec, th: f64) -> f64 {
        let q = NoiseRule::new(m);
        let k = self.partition.label_of(th);
        let rule = self.cell_continuations[k].rule();
        let mean = m.anchor.mean(th);
        q.x.iter().zip(&q.w).map(|(&x, &w)| w * rule.value(inner_sup(rule, m, th, mean + m.anchor.sigma * x).0)).sum()
    }
}

/// Anchor noise nodes with weights already multiplied by the density.
struct NoiseRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl NoiseRule {
    fn new(m: &ModelSpec) -> Self {
        let (lo, hi) = m.anchor.noise.tail_bound();
        let q: QuadRule = rule_on(Interval { lo, hi }, m.anchor.noise.scale(), None);
        let w = q.x.iter().zip(&q.w).map(|(&x, &w)| w * m.anchor.noise.pdf(x)).collect();
        NoiseRule { x: q.x, w }
    }
}

fn sender_payoff(rule: &dyn ActionFn, m: &ModelSpec, th: f64, b: f64, r: f64) -> f64 {
    m.sender().value(rule.value(r), th) - m.cost.value(r - b)
}

/// sup over reports: first-order root, replaced by a grid search when
/// reporting the anchor itself does better.
fn inner_sup(rule: &dyn ActionFn, m: &ModelSpec, th: f64, b: f64) -> (f64, f64) {
    let r = best_response(rule, m, th, b);
    let v = sender_payoff(rule, m, th, b, r);
    let inside = rule.domain().map_or(true, |iv| iv.contains(b));
    if inside && sender_payoff(rule, m, th, b, b) > v + 1e-14 * (1.0 + v.abs()) {
        let r = grid_best_response(rule, m, th, b, 2000);
        return (r, sender_payoff(rule, m, th, b, r));
    }
    (r, v)
}

/// Ex ante value of a label to type θ: E_b[sup_r U^S(a(r), θ) − cφ(r − b)].
fn label_value_with(rule: &dyn ActionFn, m: &ModelSpec, th: f64, q: &NoiseRule) -> f64 {
    let mean = m.anchor.mean(th);
    q.x.iter()
        .zip(&q.w)
        .map(|(&x, &w)| w * inner_sup(rule, m, th, mean + m.anchor.sigma * x).1)
        .sum()
}

pub fn label_value(rule: &dyn ActionFn, m: &ModelSpec, th: f64) -> f64 {
    label_value_with(rule, m, th, &NoiseRule::new(m))
}

fn solve_cell(m: &ModelSpec, cell: Interval, labels: usize, o: &HybridOptions) -> Result<(Continuation, f64)> {
    if labels == 1 {
        if let Some(p) = gauss::params_of(m) {
            let eq = gauss::equilibrium(p)?;
            return Ok((Continuation::Linear(LinearRule { alpha: eq.alpha, intercept: eq.intercept }), 0.0));
        }
    }
    let cm = m.with_prior(m.prior.restrict(cell)?);
    match m.message_space {
        MessageSpace::WholeLine => {
            let sol = solve_whole_line(&cm, &o.half_widths, &o.bvp)?;
            let mismatch = sol.steps.last().map_or(0.0, |s| s.mismatch);
            Ok((Continuation::Grid(sol.rule), mismatch))
        }
        MessageSpace::Compact { .. } => Ok((Continuation::Grid(solve_bvp(&cm, &o.bvp)?.rule), 0.0)),
    }
}

fn solve_cells(m: &ModelSpec, cutoffs: &[f64], o: &HybridOptions) -> Result<Vec<(Continuation, f64)>> {
    let n = cutoffs.len() - 1;
    (0..n)
        .into_par_iter()
        .map(|k| solve_cell(m, Interval { lo: cutoffs[k], hi: cutoffs[k + 1] }, n, o))
        .collect()
}

fn no_hybrid(e: Error) -> Error {
    match e {
        Error::NoHybridFound(_) => e,
        other => Error::NoHybridFound(format!("cell continuation failed: {other}")),
    }
}

/// Type indifferent between labels j−1 and j, given the continuations.
fn indifference_point(m: &ModelSpec, cells: &[(Continuation, f64)], j: usize, bracket: Interval, q: &NoiseRule) -> Result<f64> {
    let f = |t: f64| label_value_with(cells[j].0.rule(), m, t, q) - label_value_with(cells[j - 1].0.rule(), m, t, q);
    match find_root(f, bracket, 1e-12 * (1.0 + bracket.width())) {
        Ok(t) => Ok(t),
        Err(_) => find_root(f, m.prior.support(), 1e-12 * (1.0 + bracket.width())).map_err(|_| {
            Error::NoHybridFound(format!("no type is indifferent between labels {} and {j}", j - 1))
        }),
    }
}

fn gaps(m: &ModelSpec, cells: &[(Continuation, f64)], cutoffs: &[f64], q: &NoiseRule) -> Vec<f64> {
    (1..cutoffs.len() - 1)
        .into_par_iter()
        .map(|j| {
            let t = cutoffs[j];
            label_value_with(cells[j].0.rule(), m, t, q) - label_value_with(cells[j - 1].0.rule(), m, t, q)
        })
        .collect()
}

/// V̄_j(t_j) − V̄_{j−1}(t_j) at each interior cutoff, with every cell's
/// continuation solved for the given cutoffs.
pub fn boundary_gaps(m: &ModelSpec, cutoffs: &[f64], o: &HybridOptions) -> Result<Vec<f64>> {
    let cells = solve_cells(m, cutoffs, o).map_err(no_hybrid)?;
    Ok(gaps(m, &cells, cutoffs, &NoiseRule::new(m)))
}

fn ordered(cutoffs: &[f64]) -> bool {
    cutoffs.windows(2).all(|w| w[1] > w[0])
}

/// Regular hybrid with `n` labels. Cutoffs start from the n-label cheap-talk
/// partition (equal prior mass if none exists), are moved by damped
/// re-solving of each boundary indifference, and are finished by Newton
/// steps on the boundary gaps when the damped sweep is slow.
pub fn hybrid_exact(m: &ModelSpec, n: usize) -> Result<HybridEquilibrium> {
    hybrid_exact_with(m, n, &HybridOptions::default())
}

pub fn hybrid_exact_with(m: &ModelSpec, n: usize, o: &HybridOptions) -> Result<HybridEquilibrium> {
    m.check()?;
    if n == 0 {
        return Err(Error::NoHybridFound("need at least one label".into()));
    }
    let sup = m.prior.support();
    let q = NoiseRule::new(m);
    let mut cutoffs = match solve_partition_general(m, n) {
        Ok(p) => p.cutoffs,
        Err(_) => (0..=n).map(|k| m.prior.quantile(k as f64 / n as f64)).collect(),
    };
    cutoffs[0] = sup.lo;
    cutoffs[n] = sup.hi;

    let mut cells = solve_cells(m, &cutoffs, o).map_err(no_hybrid)?;
    let mut iterations = 0;
    let mut newton_steps = 0;
    let mut converged = n == 1;
    while !converged && iterations < o.damped_iter {
        iterations += 1;
        let targets: Vec<f64> = (1..n)
            .into_par_iter()
            .map(|j| indifference_point(m, &cells, j, Interval { lo: cutoffs[j - 1], hi: cutoffs[j + 1] }, &q))
            .collect::<Result<_>>()?;
        let moves: Vec<f64> = targets.iter().zip(&cutoffs[1..n]).map(|(t, c)| t - c).collect();
        let worst = moves.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (j, mv) in moves.iter().enumerate() {
            cutoffs[j + 1] += o.damping * mv;
        }
        if !ordered(&cutoffs) {
            return Err(Error::NoHybridFound("cutoffs crossed during the damped sweep".into()));
        }
        cells = solve_cells(m, &cutoffs, o).map_err(no_hybrid)?;
        converged = worst < o.tol;
    }
    while !converged && newton_steps < o.newton_iter {
        newton_steps += 1;
        let step = newton_step(m, &cutoffs, &cells, o, &q)?;
        let mut lambda = 1.0;
        let next = loop {
            let trial: Vec<f64> =
                cutoffs.iter().enumerate().map(|(k, c)| if k == 0 || k == n { *c } else { c - lambda * step[k - 1] }).collect();
            if ordered(&trial) {
                break trial;
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::NoHybridFound("Newton step cannot keep the cutoffs ordered".into()));
            }
        };
        let worst = step.iter().fold(0.0f64, |a, v| a.max(v.abs())) * lambda;
        cutoffs = next;
        cells = solve_cells(m, &cutoffs, o).map_err(no_hybrid)?;
        converged = worst < o.tol;
    }
    if !converged {
        return Err(Error::NoHybridFound(format!(
            "cutoffs still moving after {iterations} damped sweeps and {newton_steps} Newton steps"
        )));
    }
    assemble(m, cutoffs, cells, &q, o, iterations, newton_steps)
}

/// Anchored continuations inside a given partition, without moving the
/// cutoffs; `indifference` then reports how far the labels are from
/// incentive compatibility.
pub fn hybrid_with_cutoffs(m: &ModelSpec, cutoffs: &[f64], o: &HybridOptions) -> Result<HybridEquilibrium> {
    m.check()?;
    if cutoffs.len() < 2 || !ordered(cutoffs) {
        return Err(Error::NoHybridFound("cutoffs must be increasing".into()));
    }
    let cells = solve_cells(m, cutoffs, o).map_err(no_hybrid)?;
    assemble(m, cutoffs.to_vec(), cells, &NoiseRule::new(m), o, 0, 0)
}

fn assemble(
    m: &ModelSpec,
    cutoffs: Vec<f64>,
    cells: Vec<(Continuation, f64)>,
    q: &NoiseRule,
    o: &HybridOptions,
    iterations: usize,
    newton_steps: usize,
) -> Result<HybridEquilibrium> {
    check_label_order(&cells)?;
    let sup = m.prior.support();
    let indifference: Vec<f64> = gaps(m, &cells, &cutoffs, q).iter().map(|g| g.abs()).collect();
    let (welfare, actions) = hybrid_welfare(m, &cutoffs, &cells, q);
    let nodes = o.label_nodes.max(2);
    let label_values = cells
        .par_iter()
        .map(|(c, _)| SampledFunction::from_fn(sup, nodes, |t| label_value_with(c.rule(), m, t, q)))
        .collect::<Result<Vec<_>>>()?;
    let (cell_continuations, continuation_mismatch) = cells.into_iter().unzip();
    Ok(HybridEquilibrium {
        partition: Partition { cutoffs, actions },
        cell_continuations,
        continuation_mismatch,
        label_values,
        indifference,
        iterations,
        newton_steps,
        welfare,
    })
}

/// Newton correction for the boundary gaps, with a tridiagonal
/// finite-difference Jacobian: moving t_j re-solves cells j−1 and j only.
fn newton_step(m: &ModelSpec, cutoffs: &[f64], cells: &[(Continuation, f64)], o: &HybridOptions, q: &NoiseRule) -> Result<Vec<f64>> {
    let n = cutoffs.len() - 1;
    let g0 = gaps(m, cells, cutoffs, q);
    let cols: Vec<[f64; 3]> = (1..n)
        .into_par_iter()
        .map(|j| -> Result<[f64; 3]> {
            let room = (cutoffs[j + 1] - cutoffs[j]).min(cutoffs[j] - cutoffs[j - 1]);
            let eps = (1e-5 * room).max(1e-9);
            let mut t = cutoffs.to_vec();
            t[j] += eps;
            let lo = solve_cell(m, Interval { lo: t[j - 1], hi: t[j] }, n, o).map_err(no_hybrid)?;
            let hi = solve_cell(m, Interval { lo: t[j], hi: t[j + 1] }, n, o).map_err(no_hybrid)?;
            let v = |c: &Continuation, th: f64| label_value_with(c.rule(), m, th, q);
            let mut col = [0.0; 3];
            // row j−1: labels j−2 | j−1 at t_{j−1}
            if j >= 2 {
                col[0] = (v(&lo.0, t[j - 1]) - v(&cells[j - 2].0, t[j - 1]) - g0[j - 2]) / eps;
            }
            col[1] = (v(&hi.0, t[j]) - v(&lo.0, t[j]) - g0[j - 1]) / eps;
            if j + 1 < n {
                col[2] = (v(&cells[j + 1].0, t[j + 1]) - v(&hi.0, t[j + 1]) - g0[j]) / eps;
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;
    let k = n - 1;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    for (c, col) in cols.iter().enumerate() {
        diag[c] = col[1];
        if c >= 1 {
            sup[c - 1] = col[0];
        }
        if c + 1 < k {
            sub[c + 1] = col[2];
        }
    }
    let step = solve_tridiagonal(&sub, &diag, &sup, &g0);
    if step.iter().any(|s| !s.is_finite()) {
        return Err(Error::NoHybridFound("singular cutoff Jacobian".into()));
    }
    Ok(step)
}

/// a_k(r) < a_{k+1}(r) on a grid spanning every continuation's domain.
fn check_label_order(cells: &[(Continuation, f64)]) -> Result<()> {
    if cells.len() < 2 {
        return Ok(());
    }
    let (lo, hi) = cells.iter().filter_map(|(c, _)| c.rule().domain()).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), iv| {
        (l.min(iv.lo), h.max(iv.hi))
    });
    if !lo.is_finite() {
        return Ok(());
    }
    for i in 0..=800 {
        let r = lo + (hi - lo) * i as f64 / 800.0;
        for k in 1..cells.len() {
            let (a0, a1) = (cells[k - 1].0.rule().value(r), cells[k].0.rule().value(r));
            if !(a1 > a0) {
                return Err(Error::RegularityViolation {
                    r,
                    reason: format!("label {} action {a1} not above label {} action {a0}", k, k - 1),
                });
            }
        }
    }
    Ok(())
}

/// Welfare by quadrature over each label's states and the anchor noise,
/// with the expected action per label.
fn hybrid_welfare(m: &ModelSpec, cutoffs: &[f64], cells: &[(Continuation, f64)], q: &NoiseRule) -> (HybridWelfare, Vec<f64>) {
    let per_cell: Vec<[f64; 7]> = cells
        .par_iter()
        .enumerate()
        .map(|(k, (c, _))| {
            let cell = Interval { lo: cutoffs[k], hi: cutoffs[k + 1] };
            let rule = c.rule();
            let th_rule = rule_on(cell, m.prior.natural_scale().min(cell.width()), None);
            let mut acc = [0.0; 7];
            for (&th, &wt) in th_rule.x.iter().zip(&th_rule.w) {
                let f = wt * m.prior.density(th);
                if f == 0.0 {
                    continue;
                }
                let ideal_r = m.receiver().ideal(th).map(|a| m.receiver().value(a, th)).unwrap_or(f64::NAN);
                let ideal_s = m.sender().ideal(th).map(|a| m.sender().value(a, th)).unwrap_or(f64::NAN);
                let mean = m.anchor.mean(th);
                let mut inner = [0.0; 4];
                for (&x, &w) in q.x.iter().zip(&q.w) {
                    let b = mean + m.anchor.sigma * x;
                    let (r, _) = inner_sup(rule, m, th, b);
                    let a = rule.value(r);
                    inner[0] += w * m.receiver().value(a, th);
                    inner[1] += w * m.sender().value(a, th);
                    inner[2] += w * m.cost.value(r - b);
                    inner[3] += w * a;
                }
                acc[0] += f * inner[0];
                acc[1] += f * inner[1];
                acc[2] += f * inner[2];
                acc[3] += f * ideal_r;
                acc[4] += f * ideal_s;
                acc[5] += f * inner[3];
                acc[6] += f;
            }
            acc
        })
        .collect();
    let mut t = [0.0; 7];
    for c in &per_cell {
        for i in 0..7 {
            t[i] += c[i];
        }
    }
    let actions = per_cell.iter().map(|c| c[5] / c[6]).collect();
    let welfare = HybridWelfare {
        w_r: t[0],
        w_s: t[1] - t[2],
        loss_r: t[3] - t[0],
        loss_s: t[4] - t[1] + t[2],
        mismatch_s: t[4] - t[1],
        reporting_cost: t[2],
    };
    (welfare, actions)
}

/// One point of the low-bias scaling table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub d: f64,
    pub labels: usize,
    pub reporting_cost: f64,
    pub mismatch_loss: f64,
    /// Receiver losses under cheap talk and the hybrid.
    pub loss_c_r: f64,
    pub loss_h_r: f64,
    /// Hybrid minus most informative cheap-talk loss, per player.
    pub excess_r: f64,
    pub excess_s: f64,
    /// Leading-order excess from the profile integrals (receiver).
    pub excess_leading: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    pub cost_slope: f64,
    pub mismatch_slope: f64,
}

/// Most informative hybrid at bias `d`: the largest label count, starting
/// from the cheap-talk maximum and stepping down, for which the solver
/// converges.
pub fn most_informative_hybrid(m: &ModelSpec, cap: usize, o: &HybridOptions) -> Result<HybridEquilibrium> {
    let top = crate::cheap_talk::max_labels(m, cap)?.labels();
    let mut last = None;
    for n in (1..=top).rev() {
        match hybrid_exact_with(m, n, o) {
            Ok(h) => return Ok(h),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::NoHybridFound("no label count converged".into())))
}

/// Cutoff tolerance for the low-bias table: cutoff shifts are O(d²), and a
/// cutoff error ε moves the losses by about dε.
fn scaling_tol(d: f64) -> f64 {
    (1e-3 * d * d).min(HybridOptions::default().tol)
}

/// Sender's reporting cost, action-mismatch loss and the exact excess over
/// cheap talk at the most informative hybrid along `ds`, with log-log slopes.
pub fn reporting_cost_scaling(m: &ModelSpec, ds: &[f64], cap: usize) -> Result<ScalingTable> {
    let prof = super::asymptotic::r_and_d_profiles(m, super::asymptotic::PROFILE_NODES).ok();
    let rows = ds
        .iter()
        .map(|&d| -> Result<ScalingRow> {
            if d == 0.0 {
                return Ok(ScalingRow {
                    d,
                    labels: 0,
                    reporting_cost: 0.0,
                    mismatch_loss: 0.0,
                    loss_c_r: 0.0,
                    loss_h_r: 0.0,
                    excess_r: 0.0,
                    excess_s: 0.0,
                    excess_leading: 0.0,
                });
            }
            let mut md = m.clone();
            md.payoffs.sender = m.sender().with_bias(d);
            let o = HybridOptions { tol: scaling_tol(d), ..HybridOptions::default() };
            let h = most_informative_hybrid(&md, cap, &o)?;
            let ct = crate::cheap_talk::max_labels(&md, cap)?;
            let wc = crate::cheap_talk::partition_welfare(&md, &ct)?;
            let excess_leading = match &prof {
                Some(p) => super::asymptotic::LossBreakdown::from_profiles(m, p, d, super::asymptotic::Player::R)?.l_h_minus_l_c,
                None => f64::NAN,
            };
            Ok(ScalingRow {
                d,
                labels: h.partition.labels(),
                reporting_cost: h.welfare.reporting_cost,
                mismatch_loss: h.welfare.mismatch_s,
                loss_c_r: wc.loss_r,
                loss_h_r: h.welfare.loss_r,
                excess_r: h.welfare.loss_r - wc.loss_r,
                excess_s: h.welfare.loss_s - wc.loss_s,
                excess_leading,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pos: Vec<&ScalingRow> = rows.iter().filter(|r| r.d > 0.0).collect();
    let xs: Vec<f64> = pos.iter().map(|r| r.d).collect();
    let cost: Vec<f64> = pos.iter().map(|r| r.reporting_cost).collect();
    let mis: Vec<f64> = pos.iter().map(|r| r.mismatch_loss).collect();
    let (cost_slope, mismatch_slope) = if xs.len() >= 2 {
        (crate::numerics::loglog_slope(&xs, &cost), crate::numerics::loglog_slope(&xs, &mis))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ScalingTable { rows, cost_slope, mismatch_slope })
}

#[derive(Debug, Clone, Serialize)]
pub struct FormatLosses {
    pub format: &'static str,
    pub cutoffs: Vec<f64>,
    pub loss_r: f64,
    pub loss_s: f64,
    pub reporting_cost: f64,
}

/// Babbling, anchor-only, n-label cheap talk, the cheap-talk partition with
/// anchored continuations inside each label, and (when it converges) the
/// hybrid whose cutoffs satisfy label indifference.
#[derive(Debug, Clone, Serialize)]
pub struct FormatComparison {
    pub babbling: FormatLosses,
    pub anchor_only: FormatLosses,
    pub cheap_talk: FormatLosses,
    pub hybrid: FormatLosses,
    /// Label-value gap at the cheap-talk cutoffs once anchors are added.
    pub hybrid_label_gap: Vec<f64>,
    pub hybrid_equilibrium: Option<FormatLosses>,
}

impl FormatComparison {
    /// Hybrid losses strictly below every pure format for both players.
    pub fn hybrid_dominates(&self) -> bool {
        [&self.babbling, &self.anchor_only, &self.cheap_talk]
            .iter()
            .all(|f| self.hybrid.loss_r < f.loss_r && self.hybrid.loss_s < f.loss_s)
    }
}

fn losses_of(format: &'static str, h: &HybridEquilibrium) -> FormatLosses {
    FormatLosses {
        format,
        cutoffs: h.partition.cutoffs.clone(),
        loss_r: h.welfare.loss_r,
        loss_s: h.welfare.loss_s,
        reporting_cost: h.welfare.reporting_cost,
    }
}

pub fn compare_formats(m: &ModelSpec, n: usize, o: &HybridOptions) -> Result<FormatComparison> {
    let pure = |format: &'static str, p: &Partition| -> Result<FormatLosses> {
        let w = crate::cheap_talk::partition_welfare(m, p)?;
        Ok(FormatLosses { format, cutoffs: p.cutoffs.clone(), loss_r: w.loss_r, loss_s: w.loss_s, reporting_cost: 0.0 })
    };
    let babbling = pure("babbling", &solve_partition_general(m, 1)?)?;
    let ct = solve_partition_general(m, n)?;
    let cheap_talk = pure("cheap_talk", &ct)?;
    let anchor_only = losses_of("anchor_only", &hybrid_exact_with(m, 1, o)?);
    let fixed = hybrid_with_cutoffs(m, &ct.cutoffs, o)?;
    let hybrid_equilibrium = hybrid_exact_with(m, n, o).ok().map(|h| losses_of("hybrid_equilibrium", &h));
    Ok(FormatComparison {
        babbling,
        anchor_only,
        cheap_talk,
        hybrid: losses_of("hybrid", &fixed),
        hybrid_label_gap: fixed.indifference.clone(),
        hybrid_equilibrium,
    })
}
