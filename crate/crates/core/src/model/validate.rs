use super::ModelSpec;
use crate::numerics::{Grid, Interval};
use serde::Serialize;

/// Grid size used by every validation check.
pub const VALIDATION_NODES: usize = 257;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Failing checks only gate the report when required.
    pub required: bool,
    /// First grid point where the check failed.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.required)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn first_failure(xs: &[f64], mut ok: impl FnMut(f64) -> bool) -> Option<f64> {
    xs.iter().copied().find(|&x| !ok(x))
}

fn check(name: &'static str, required: bool, witness: Option<f64>, detail: impl Into<String>) -> Check {
    Check { name, passed: witness.is_none(), required, witness, detail: detail.into() }
}

pub(super) fn validate(m: &ModelSpec) -> ValidationReport {
    let th = Grid::uniform(m.prior.support(), VALIDATION_NODES).nodes;
    let mut checks = Vec::new();

    let w = first_failure(&th, |t| m.prior.density(t) > 0.0);
    checks.push(check("prior_positive", true, w, "f(θ) > 0 on the support grid"));

    let scores: Vec<f64> = th.iter().map(|&t| m.prior.score(t)).collect();
    let w = (1..th.len()).find(|&i| scores[i] > scores[i - 1] + 1e-9).map(|i| th[i]);
    checks.push(check("prior_log_concave", false, w, "score f'/f nonincreasing"));

    // action range spanned by both players' ideals, padded
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ideal_fail = None;
    for &t in &th {
        for p in [m.receiver(), m.sender()] {
            match p.ideal(t) {
                Ok(a) => {
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
                Err(_) => ideal_fail = ideal_fail.or(Some(t)),
            }
        }
    }
    checks.push(check("ideal_actions", true, ideal_fail, "U_1(·, θ) has a maximizing root"));
    let acts = if lo < hi {
        let pad = 0.1 * (hi - lo);
        Grid::uniform(Interval { lo: lo - pad, hi: hi + pad }, 33).nodes
    } else {
        vec![lo]
    };

    for (name, p) in [("receiver_concave", m.receiver()), ("sender_concave", m.sender())] {
        let mut w = None;
        'outer: for &t in &th {
            for &a in &acts {
                if !(p.d11(a, t) < 0.0) {
                    w = Some(t);
                    break 'outer;
                }
            }
        }
        checks.push(check(name, true, w, "U_11 < 0 on the action-state grid"));
    }
    for (name, p) in [("receiver_single_crossing", m.receiver()), ("sender_single_crossing", m.sender())] {
        let mut w = None;
        'outer2: for &t in &th {
            for &a in &acts {
                if !(p.d12(a, t) > 0.0) {
                    w = Some(t);
                    break 'outer2;
                }
            }
        }
        checks.push(check(name, true, w, "U_12 > 0 on the action-state grid"));
    }

    let us = Grid::uniform(Interval { lo: -10.0, hi: 10.0 }, VALIDATION_NODES).nodes;
    let w = first_failure(&us, |u| m.cost.shape.d2phi(u) > 0.0);
    let kappa = us.iter().map(|&u| m.cost.shape.d2phi(u)).fold(f64::INFINITY, f64::min);
    checks.push(check("cost_curvature", true, w, format!("inf φ'' = {kappa:.3e} on [-10, 10]")));

    let w = first_failure(&us, |u| {
        let s = &m.cost.shape;
        (s.psi(s.dphi(u)) - u).abs() <= 1e-10 * (1.0 + u.abs())
    });
    checks.push(check("psi_inverts_dphi", true, w, "ψ(φ'(u)) = u within 1e-10 on [-10, 10]"));

    let w = first_failure(&th, |t| m.anchor.b0.derivative(t) > 0.0);
    checks.push(check("anchor_increasing", true, w, "b₀'(θ) > 0"));

    let (xl, xh) = m.anchor.noise.tail_bound();
    let xs = Grid::uniform(Interval { lo: xl, hi: xh }, VALIDATION_NODES).nodes;
    let sc: Vec<f64> = xs.iter().map(|&x| m.anchor.noise.score(x)).collect();
    let w = (1..xs.len()).find(|&i| sc[i] > sc[i - 1] + 1e-9).map(|i| xs[i]);
    checks.push(check("noise_log_concave", false, w, "noise score h'/h nonincreasing"));

    ValidationReport { checks }
}
