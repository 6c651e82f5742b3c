use crate::model::ModelSpec;
use crate::numerics::{fd_step, rk4_step, GaussLegendre, Grid, Interval, SampledFunction};
use crate::{Error, Result};
use serde::Serialize;

/// Marginal separation incentive T, its running integral Γ, and E[Γ].
#[derive(Debug, Clone, Serialize)]
pub struct CostFloorObjects {
    pub t: SampledFunction,
    pub gamma: SampledFunction,
    pub expected_gamma: f64,
    /// ∫ (1 - F(u)) T(u) du, computed independently of `expected_gamma`.
    pub tail_integral: f64,
}

impl CostFloorObjects {
    pub fn fubini_gap(&self) -> f64 {
        (self.expected_gamma - self.tail_integral).abs()
    }
}

/// T(θ) = U^S₁(a^R(θ), θ) · (a^R)'(θ).
pub fn separation_incentive(m: &ModelSpec, th: f64) -> Result<f64> {
    let ar = m.receiver().ideal(th)?;
    let h = fd_step(th);
    let slope = (m.receiver().ideal(th + h)? - m.receiver().ideal(th - h)?) / (2.0 * h);
    Ok(m.sender().d1(ar, th) * slope)
}

const FLOOR_PANELS: usize = 400;

pub fn cost_floor(m: &ModelSpec) -> Result<CostFloorObjects> {
    let sup = m.prior.support();
    let grid = Grid::uniform(sup, FLOOR_PANELS + 1);
    let gl = GaussLegendre::new(10);
    let x = &grid.nodes;
    let mut t_vals = Vec::with_capacity(x.len());
    for &th in x {
        t_vals.push(separation_incentive(m, th)?);
    }
    let mut gamma = vec![0.0; x.len()];
    let mut expected = 0.0;
    let mut tail = 0.0;
    for i in 0..FLOOR_PANELS {
        let panel = Interval { lo: x[i], hi: x[i + 1] };
        let outer = gl.composite(panel, 1);
        let mut inc = 0.0;
        for (&u, &w) in outer.x.iter().zip(&outer.w) {
            let tu = separation_incentive(m, u)?;
            inc += w * tu;
            tail += w * (1.0 - m.prior.cdf(u)) * tu;
            // Γ(u) = Γ(x_i) + ∫_{x_i}^u T
            let part = if u > x[i] {
                gl.composite(Interval { lo: x[i], hi: u }, 1)
                    .integrate(|v| separation_incentive(m, v).unwrap_or(f64::NAN))
            } else {
                0.0
            };
            expected += w * m.prior.density(u) * (gamma[i] + part);
        }
        gamma[i + 1] = gamma[i] + inc;
    }
    if !expected.is_finite() {
        return Err(Error::NonFiniteIntegrand { x: f64::NAN });
    }
    Ok(CostFloorObjects {
        t: SampledFunction::new(x.clone(), t_vals)?,
        gamma: SampledFunction::new(x.clone(), gamma)?,
        expected_gamma: expected,
        tail_integral: tail,
    })
}

/// Fully separating report path under a deterministic anchor b₀(θ).
#[derive(Debug, Clone, Serialize)]
pub struct SeparatingPath {
    pub c: f64,
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    /// Y_c(θ) = c φ(ρ_c(θ) - b₀(θ))
    pub y: Vec<f64>,
}

impl SeparatingPath {
    pub fn rho_fn(&self) -> Result<SampledFunction> {
        SampledFunction::new(self.theta.clone(), self.rho.clone())
    }

    /// max over the path of Γ(θ) - Y_c(θ).
    pub fn floor_gap(&self, floor: &CostFloorObjects) -> f64 {
        self.theta.iter().zip(&self.y).map(|(&t, &y)| floor.gamma.eval(t) - y).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_floor_gap(&self, floor: &CostFloorObjects) -> f64 {
        self.theta.iter().zip(&self.y).map(|(&t, &y)| floor.gamma.eval(t) - y).fold(f64::INFINITY, f64::min)
    }
}

const RHO_STEPS: usize = 4000;

/// Integrates ϑ'(r) = c φ'(r - b₀(ϑ)) / T(ϑ) from (b₀(θ̲), θ̲) until ϑ reaches
/// θ̄. The anchor noise in `m` is ignored. The cost scale is `c`.
pub fn separating_rho(m: &ModelSpec, c: f64) -> Result<SeparatingPath> {
    let sup = m.prior.support();
    let check = Grid::uniform(sup, 257);
    let mut t_min = f64::INFINITY;
    for &th in &check.nodes {
        let t = separation_incentive(m, th)?;
        if !(t > 0.0) {
            return Err(Error::AssumptionViolation(format!("separation incentive T({th}) = {t} is not positive")));
        }
        t_min = t_min.min(t);
    }
    let b0 = |th: f64| m.anchor.mean(th);
    let shape = &m.cost.shape;
    let mut f = |r: f64, y: &[f64; 1]| -> [f64; 1] {
        let th = y[0].min(sup.hi);
        let t = separation_incentive(m, th).unwrap_or(f64::NAN);
        [c * shape.dphi(r - b0(th)) / t]
    };
    // explicit stepping: keep h below the relaxation scale T / (c φ'')
    let kappa = m.cost.shape.d2phi(0.0).max(m.cost.shape.d2phi(1.0));
    let h = (sup.width() / RHO_STEPS as f64).min(0.5 * t_min / (c * kappa));
    let mut r = b0(sup.lo);
    let mut y = [sup.lo];
    let mut theta = vec![sup.lo];
    let mut rho = vec![r];
    let max_steps = 1000 * RHO_STEPS + (4.0 * sup.width() / h) as usize;
    for _ in 0..max_steps {
        let next = rk4_step(&mut f, r, &y, h);
        if !next[0].is_finite() {
            return Err(Error::NonFiniteIntegrand { x: r });
        }
        if next[0] >= sup.hi {
            let s = (sup.hi - y[0]) / (next[0] - y[0]);
            theta.push(sup.hi);
            rho.push(r + s * h);
            break;
        }
        r += h;
        y = next;
        if y[0] > *theta.last().unwrap() {
            theta.push(y[0]);
            rho.push(r);
        }
    }
    if *theta.last().unwrap() < sup.hi {
        return Err(Error::NoConvergence("separating path did not reach the top state".into()));
    }
    let y = theta.iter().zip(&rho).map(|(&t, &r)| c * shape.phi(r - b0(t))).collect();
    Ok(SeparatingPath { c, theta, rho, y })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_sender_has_no_floor() {
        let m = ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let fl = cost_floor(&m).unwrap();
        assert!(fl.expected_gamma.abs() < 1e-14 && fl.tail_integral.abs() < 1e-14);
        assert!(matches!(separating_rho(&m, 1.0), Err(Error::AssumptionViolation(_))));
    }

    #[test]
    fn expensive_distortion_keeps_reports_near_the_anchor() {
        let m = ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        let path = separating_rho(&m, 1e4).unwrap();
        let worst = path.theta.iter().zip(&path.rho).map(|(t, r)| (r - t).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
    }
}
