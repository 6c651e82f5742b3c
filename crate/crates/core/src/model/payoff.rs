use crate::numerics::{expand_bracket, fd_step, find_root, Interval, SampledFunction};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Shape of the state-dependent bias, scaled by the sender's `bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaHat {
    Constant(f64),
    Affine { intercept: f64, slope: f64 },
    Tabulated(SampledFunction),
}

impl Default for DeltaHat {
    fn default() -> Self {
        DeltaHat::Constant(1.0)
    }
}

impl DeltaHat {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            DeltaHat::Constant(v) => *v,
            DeltaHat::Affine { intercept, slope } => intercept + slope * x,
            DeltaHat::Tabulated(t) => t.eval(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            DeltaHat::Constant(_) => 0.0,
            DeltaHat::Affine { slope, .. } => *slope,
            DeltaHat::Tabulated(t) => t.derivative(x),
        }
    }
}

/// Symmetric loss in the action error `e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    /// κ e² / 2
    Quadratic {
        #[serde(default = "one")]
        kappa: f64,
    },
    /// κ e⁴
    Quartic {
        #[serde(default = "one")]
        kappa: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Loss {
    pub fn value(&self, e: f64) -> f64 {
        match *self {
            Loss::Quadratic { kappa } => 0.5 * kappa * e * e,
            Loss::Quartic { kappa } => kappa * e.powi(4),
        }
    }

    pub fn d1(&self, e: f64) -> f64 {
        match *self {
            Loss::Quadratic { kappa } => kappa * e,
            Loss::Quartic { kappa } => 4.0 * kappa * e.powi(3),
        }
    }

    pub fn d2(&self, e: f64) -> f64 {
        match *self {
            Loss::Quadratic { kappa } => kappa,
            Loss::Quartic { kappa } => 12.0 * kappa * e * e,
        }
    }
}

type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Payoff given by closures. Missing partials fall back to central
/// differences with step 1e-6 (1 + |x|).
#[derive(Clone)]
pub struct GeneralPayoff {
    pub u: Fn2,
    pub u1: Option<Fn2>,
    pub u11: Option<Fn2>,
    pub u12: Option<Fn2>,
}

impl fmt::Debug for GeneralPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GeneralPayoff")
    }
}

impl PartialEq for GeneralPayoff {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.u, &other.u)
    }
}

/// Payoff `U(a, θ)` of either player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payoff {
    /// `U = -loss(a - θ - bias·δ̂(θ))`
    Loss {
        loss: Loss,
        #[serde(default)]
        bias: f64,
        #[serde(default)]
        delta_hat: DeltaHat,
    },
    #[serde(skip)]
    General(GeneralPayoff),
}

impl Payoff {
    pub fn quadratic(kappa: f64) -> Self {
        Payoff::Loss { loss: Loss::Quadratic { kappa }, bias: 0.0, delta_hat: DeltaHat::default() }
    }

    /// Sender payoff `-(κ/2)(a - θ - d δ̂(θ))²`.
    pub fn quadratic_biased(kappa: f64, d: f64, delta_hat: DeltaHat) -> Self {
        Payoff::Loss { loss: Loss::Quadratic { kappa }, bias: d, delta_hat }
    }

    pub fn quartic(kappa: f64) -> Self {
        Payoff::Loss { loss: Loss::Quartic { kappa }, bias: 0.0, delta_hat: DeltaHat::default() }
    }

    pub fn general(u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Payoff::General(GeneralPayoff { u: Arc::new(u), u1: None, u11: None, u12: None })
    }

    /// Bias term `bias·δ̂(θ)` for loss payoffs, zero otherwise.
    pub fn shift(&self, theta: f64) -> f64 {
        match self {
            Payoff::Loss { bias, delta_hat, .. } => bias * delta_hat.value(theta),
            Payoff::General(_) => 0.0,
        }
    }

    pub fn bias(&self) -> f64 {
        match self {
            Payoff::Loss { bias, .. } => *bias,
            Payoff::General(_) => 0.0,
        }
    }

    pub fn delta_hat(&self) -> Option<&DeltaHat> {
        match self {
            Payoff::Loss { delta_hat, .. } => Some(delta_hat),
            Payoff::General(_) => None,
        }
    }

    /// Curvature of the loss at zero error, when defined.
    pub fn kappa(&self) -> Option<f64> {
        match self {
            Payoff::Loss { loss, .. } => Some(loss.d2(0.0)),
            Payoff::General(_) => None,
        }
    }

    pub fn loss(&self) -> Option<Loss> {
        match self {
            Payoff::Loss { loss, .. } => Some(*loss),
            Payoff::General(_) => None,
        }
    }

    pub fn with_bias(&self, d: f64) -> Self {
        match self {
            Payoff::Loss { loss, delta_hat, .. } => Payoff::Loss { loss: *loss, bias: d, delta_hat: delta_hat.clone() },
            Payoff::General(_) => self.clone(),
        }
    }

    pub fn value(&self, a: f64, th: f64) -> f64 {
        match self {
            Payoff::Loss { loss, .. } => -loss.value(a - th - self.shift(th)),
            Payoff::General(g) => (g.u)(a, th),
        }
    }

    /// ∂U/∂a
    pub fn d1(&self, a: f64, th: f64) -> f64 {
        match self {
            Payoff::Loss { loss, .. } => -loss.d1(a - th - self.shift(th)),
            Payoff::General(g) => match &g.u1 {
                Some(f) => f(a, th),
                None => {
                    let h = fd_step(a);
                    ((g.u)(a + h, th) - (g.u)(a - h, th)) / (2.0 * h)
                }
            },
        }
    }

    /// ∂²U/∂a²
    pub fn d11(&self, a: f64, th: f64) -> f64 {
        match self {
            Payoff::Loss { loss, .. } => -loss.d2(a - th - self.shift(th)),
            Payoff::General(g) => match &g.u11 {
                Some(f) => f(a, th),
                None => {
                    let h = fd_step(a);
                    (self.d1(a + h, th) - self.d1(a - h, th)) / (2.0 * h)
                }
            },
        }
    }

    /// ∂²U/∂a∂θ
    pub fn d12(&self, a: f64, th: f64) -> f64 {
        match self {
            Payoff::Loss { loss, bias, delta_hat } => {
                loss.d2(a - th - self.shift(th)) * (1.0 + bias * delta_hat.derivative(th))
            }
            Payoff::General(g) => match &g.u12 {
                Some(f) => f(a, th),
                None => {
                    let h = fd_step(th);
                    (self.d1(a, th + h) - self.d1(a, th - h)) / (2.0 * h)
                }
            },
        }
    }

    /// Ideal action at θ: the root of ∂U/∂a.
    pub fn ideal(&self, th: f64) -> Result<f64> {
        if let Payoff::Loss { .. } = self {
            return Ok(th + self.shift(th));
        }
        let lim = Interval { lo: th - 1e6, hi: th + 1e6 };
        let br = expand_bracket(|a| self.d1(a, th), th, 1.0, lim)
            .map_err(|_| Error::IllConditionedPayoff(format!("no stationary action at theta = {th}")))?;
        let a = find_root(|a| self.d1(a, th), br, 1e-13)?;
        if self.d11(a, th) > 0.0 {
            return Err(Error::IllConditionedPayoff(format!("stationary action is a minimum at theta = {th}")));
        }
        Ok(a)
    }
}
