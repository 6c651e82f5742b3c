//! Small-bias expansion of hybrid versus cheap-talk losses: anchor Fisher
//! information, within-cell posterior shifts, boundary gains, the extra
//! cutoff width the anchor requires, and the R and D profiles.

use crate::model::{rule_on, ModelSpec, Noise};
use crate::numerics::{rk4_step, GaussLegendre, Grid, Interval};
use crate::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Player {
    R,
    S,
}

/// I = (β/σ)² ∫ s_ω² ω.
pub fn fisher_info(beta: f64, sigma: f64, noise: &Noise) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let (lo, hi) = noise.tail_bound();
    let q = rule_on(Interval { lo, hi }, noise.scale(), None);
    let m2 = q.integrate(|u| noise.score(u).powi(2) * noise.pdf(u));
    (beta / sigma).powi(2) * m2
}

/// Expected shift of the within-cell posterior mean and its second moment
/// for a cell of the given width on one side of a boundary.
pub fn shift_moments(side: Side, width: f64, s: f64, info: f64) -> (f64, f64) {
    let w3 = width.powi(3);
    let w4 = w3 * width;
    let lead = info / 24.0 * w3;
    let mean = match side {
        Side::Right => -lead - s * info / 144.0 * w4,
        Side::Left => lead - s * info / 144.0 * w4,
    };
    (mean, info / 144.0 * w4)
}

/// Sender's expected gain at the boundary type from the anchor inside the
/// adjacent cell.
pub fn boundary_gain(side: Side, width: f64, d: f64, delta_hat: f64, s: f64, kappa_s: f64, info: f64) -> f64 {
    let w3 = width.powi(3);
    let bracket = match side {
        Side::Right => 5.0 / 288.0 * w3 * width - d * delta_hat / 24.0 * w3 + s / 144.0 * w3 * width * width,
        Side::Left => 5.0 / 288.0 * w3 * width + d * delta_hat / 24.0 * w3 - s / 144.0 * w3 * width * width,
    };
    kappa_s * info * bracket
}

/// Extra right-cell width restoring boundary indifference once the anchor
/// is added.
pub fn width_correction(h: f64, d: f64, delta_hat: f64, s: f64, info: f64) -> f64 {
    info * (7.0 / 9.0 * d * delta_hat * h * h - s / 27.0 * h.powi(4))
}

/// Leading-order profiles on a uniform grid over Θ.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticProfiles {
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub d: Vec<f64>,
    /// D from its integral representation, independent of the R stepping.
    pub d_closed: Vec<f64>,
    pub fisher_i: f64,
    /// Whether δ̂ > 0, δ̂' ≥ 0 and s' ≤ 0 hold on the grid.
    pub monotone_conditions: bool,
    pub min_interior_d: f64,
}

impl AsymptoticProfiles {
    pub fn max_closed_gap(&self) -> f64 {
        self.d.iter().zip(&self.d_closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// ∫ g(θ) f(θ) dθ by composite Simpson on the profile grid.
    fn prior_integral(&self, m: &ModelSpec, f: &[f64]) -> f64 {
        let n = self.theta.len() - 1;
        let h = (self.theta[n] - self.theta[0]) / n as f64;
        let term = |i: usize| m.prior.density(self.theta[i]) * f[i];
        let mut acc = term(0) + term(n);
        for i in 1..n {
            acc += term(i) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }
}

pub const PROFILE_NODES: usize = 2001;
const SUBSTEPS: usize = 8;

fn anchor_information(m: &ModelSpec) -> Result<f64> {
    let beta = m
        .anchor
        .beta()
        .ok_or_else(|| Error::AssumptionViolation("the expansion needs an affine anchor mean".into()))?;
    Ok(fisher_info(beta, m.anchor.sigma, &m.anchor.noise))
}

/// Integrates Y and R jointly by RK4, forms D = R − (I/12)Y², and evaluates
/// D separately as (I/18) g^(-2/3) ∫ Y (4δ̂ − sY/3) g^(2/3). `nodes` must be
/// odd.
pub fn r_and_d_profiles(m: &ModelSpec, nodes: usize) -> Result<AsymptoticProfiles> {
    if nodes < 3 || nodes % 2 == 0 {
        return Err(Error::InvalidModel(format!("profile grid needs an odd node count >= 3, got {nodes}")));
    }
    let dh = m
        .sender()
        .delta_hat()
        .cloned()
        .ok_or_else(|| Error::AssumptionViolation("the expansion needs a loss payoff with a bias profile".into()))?;
    let info = anchor_information(m)?;
    let sup = m.prior.support();
    let theta = Grid::uniform(sup, nodes).nodes;
    let s = |t: f64| m.prior.score(t);

    let mut rhs = |t: f64, v: &[f64; 2]| {
        let (st, dt) = (s(t), dh.value(t));
        [
            8.0 * dt - 2.0 / 3.0 * st * v[0],
            -2.0 / 3.0 * st * v[1] + info * (14.0 / 9.0 * dt * v[0] - 2.0 / 27.0 * st * v[0] * v[0]),
        ]
    };
    let mut y = vec![0.0; nodes];
    let mut r = vec![0.0; nodes];
    let mut state = [0.0, 0.0];
    for i in 1..nodes {
        let h = (theta[i] - theta[i - 1]) / SUBSTEPS as f64;
        for k in 0..SUBSTEPS {
            state = rk4_step(&mut rhs, theta[i - 1] + h * k as f64, &state, h);
        }
        y[i] = state[0];
        r[i] = state[1];
    }
    let d: Vec<f64> = y.iter().zip(&r).map(|(y, r)| r - info / 12.0 * y * y).collect();

    // Y(t) = 8 g(t)^(-2/3) A(t), A = ∫ δ̂ g^(2/3); D(θ) = (I/18) g(θ)^(-2/3) B(θ).
    let gl = GaussLegendre::new(10);
    let g23 = |t: f64| m.prior.density(t).powf(2.0 / 3.0);
    let mut a_nodes = vec![0.0; nodes];
    let mut d_closed = vec![0.0; nodes];
    let mut b_acc = 0.0;
    for i in 1..nodes {
        let panel = Interval { lo: theta[i - 1], hi: theta[i] };
        let q = gl.composite(panel, 1);
        let mut b_inc = 0.0;
        for (&t, &w) in q.x.iter().zip(&q.w) {
            let a_t = a_nodes[i - 1] + gl.composite(Interval { lo: panel.lo, hi: t }, 1).integrate(|u| dh.value(u) * g23(u));
            let yt = 8.0 * a_t / g23(t);
            b_inc += w * yt * (4.0 * dh.value(t) - s(t) * yt / 3.0) * g23(t);
        }
        a_nodes[i] = a_nodes[i - 1] + q.integrate(|u| dh.value(u) * g23(u));
        b_acc += b_inc;
        d_closed[i] = info / 18.0 * b_acc / g23(theta[i]);
    }

    let monotone_conditions = theta.iter().all(|&t| dh.value(t) > 0.0 && dh.derivative(t) >= 0.0)
        && theta.windows(2).all(|w| s(w[1]) <= s(w[0]) + 1e-12 * (1.0 + s(w[0]).abs()));
    let min_interior_d = d[1..nodes - 1].iter().copied().fold(f64::INFINITY, f64::min);
    if monotone_conditions && info > 0.0 && !(min_interior_d > 0.0) {
        let i = (1..nodes - 1).find(|&i| !(d[i] > 0.0)).unwrap_or(1);
        return Err(Error::AssumptionViolation(format!("D({}) = {} is not positive", theta[i], d[i])));
    }
    Ok(AsymptoticProfiles { theta, y, r, d, d_closed, fisher_i: info, monotone_conditions, min_interior_d })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub d: f64,
    pub l_c_leading: f64,
    pub cutoff_cost: f64,
    pub info_gain: f64,
    pub l_h_minus_l_c: f64,
}

impl LossBreakdown {
    pub fn from_profiles(m: &ModelSpec, prof: &AsymptoticProfiles, d: f64, player: Player) -> Result<Self> {
        let payoff = match player {
            Player::R => m.receiver(),
            Player::S => m.sender(),
        };
        let kappa = payoff
            .kappa()
            .filter(|k| *k > 0.0)
            .ok_or_else(|| Error::AssumptionViolation("loss curvature at zero must be positive".into()))?;
        let iy2: Vec<f64> = prof.y.iter().map(|y| prof.fisher_i * y * y).collect();
        let l_c_leading = d / 24.0 * kappa * prof.prior_integral(m, &prof.y);
        let cutoff_cost = d * d / 24.0 * kappa * prof.prior_integral(m, &prof.r);
        let info_gain = d * d / 288.0 * kappa * prof.prior_integral(m, &iy2);
        Ok(LossBreakdown { d, l_c_leading, cutoff_cost, info_gain, l_h_minus_l_c: cutoff_cost - info_gain })
    }
}

pub fn loss_difference(m: &ModelSpec, d: f64, player: Player) -> Result<LossBreakdown> {
    let prof = r_and_d_profiles(m, PROFILE_NODES)?;
    LossBreakdown::from_profiles(m, &prof, d, player)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Prior;

    #[test]
    fn logistic_information() {
        // ∫ tanh²(u/2) ω = 1/3 for the standard logistic
        assert!((fisher_info(1.0, 1.0, &Noise::Logistic) - 1.0 / 3.0).abs() < 1e-10);
        assert!((fisher_info(2.0, 1.0, &Noise::Gaussian) - 4.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_prior_profiles_agree_with_closed_form() {
        let mut m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        m.prior = Prior::gaussian(0.0, 1.0).unwrap().restrict(Interval { lo: -2.0, hi: 2.0 }).unwrap();
        let p = r_and_d_profiles(&m, 801).unwrap();
        assert!(p.monotone_conditions);
        assert!(p.max_closed_gap() < 1e-9, "{}", p.max_closed_gap());
        assert!(p.min_interior_d > 0.0);
    }
}
