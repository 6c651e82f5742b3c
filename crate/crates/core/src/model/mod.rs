//! Model description: prior, payoffs, distortion cost, anchor technology and
//! message space, with a JSON file format and assumption checks.

mod anchor;
mod cost;
mod density;
mod payoff;
mod prior;
mod validate;

pub use anchor::{Anchor, AnchorMean, Noise};
pub use cost::{Cost, CostShape, GeneralShape};
pub use density::LinearDensity;
pub use payoff::{DeltaHat, GeneralPayoff, Loss, Payoff};
pub use prior::{rule_on, Prior, PriorKind};
pub use validate::{Check, ValidationReport, VALIDATION_NODES};

use crate::numerics::{Grid, Interval};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MessageSpace {
    #[default]
    WholeLine,
    Compact { lo: f64, hi: f64 },
}

impl MessageSpace {
    pub fn compact(iv: Interval) -> Self {
        MessageSpace::Compact { lo: iv.lo, hi: iv.hi }
    }

    pub fn interval(&self) -> Option<Interval> {
        match *self {
            MessageSpace::WholeLine => None,
            MessageSpace::Compact { lo, hi } => Some(Interval { lo, hi }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payoffs {
    pub receiver: Payoff,
    pub sender: Payoff,
}

/// Complete game description. The JSON file format is this struct with the
/// sections `prior`, `payoffs`, `cost`, `anchor` and `message_space`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub prior: Prior,
    pub payoffs: Payoffs,
    pub cost: Cost,
    pub anchor: Anchor,
    #[serde(default)]
    pub message_space: MessageSpace,
}

impl ModelSpec {
    /// Normal prior N(0, σ_θ²), quadratic losses with bias d, anchor
    /// b = βθ + σx with Gaussian x, quadratic cost c, whole-line messages.
    pub fn gaussian_quadratic(sigma_theta: f64, beta: f64, sigma: f64, c: f64, d: f64) -> Result<Self> {
        let m = ModelSpec {
            prior: Prior::gaussian(0.0, sigma_theta)?,
            payoffs: Payoffs {
                receiver: Payoff::quadratic(1.0),
                sender: Payoff::quadratic_biased(1.0, d, DeltaHat::Constant(1.0)),
            },
            cost: Cost::quadratic(c)?,
            anchor: Anchor::gaussian_affine(0.0, beta, sigma)?,
            message_space: MessageSpace::WholeLine,
        };
        Ok(m)
    }

    /// Uniform prior on `[lo, hi]` with otherwise the same quadratic setup.
    pub fn uniform_quadratic(lo: f64, hi: f64, beta: f64, sigma: f64, c: f64, d: f64) -> Result<Self> {
        let mut m = Self::gaussian_quadratic(1.0, beta, sigma, c, d)?;
        m.prior = Prior::uniform(lo, hi)?;
        Ok(m)
    }

    pub fn receiver(&self) -> &Payoff {
        &self.payoffs.receiver
    }

    pub fn sender(&self) -> &Payoff {
        &self.payoffs.sender
    }

    pub fn with_prior(&self, prior: Prior) -> Self {
        ModelSpec { prior, ..self.clone() }
    }

    pub fn check(&self) -> Result<()> {
        self.cost.check()?;
        self.anchor.check()?;
        if let MessageSpace::Compact { lo, hi } = self.message_space {
            Interval::new(lo, hi)?;
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: ModelSpec = serde_json::from_str(s).map_err(|e| Error::InvalidModel(e.to_string()))?;
        m.check()?;
        Ok(m)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    /// Serializable view; fails for closure-based payoffs or costs.
    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        serde_json::to_value(self).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    /// Receiver and sender ideal actions at every grid node.
    pub fn ideal_actions(&self, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut ar = Vec::with_capacity(grid.len());
        let mut as_ = Vec::with_capacity(grid.len());
        for &t in &grid.nodes {
            ar.push(self.receiver().ideal(t)?);
            as_.push(self.sender().ideal(t)?);
        }
        Ok((ar, as_))
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_model_json_round_trip() {
        let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.25).unwrap();
        let s = serde_json::to_string_pretty(&m).unwrap();
        let back = ModelSpec::from_json_str(&s).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn parses_hand_written_file() {
        let s = r#"{
            "prior": {"kind": "uniform", "lo": 0, "hi": 1},
            "payoffs": {
                "receiver": {"loss": {"kind": "quadratic"}},
                "sender": {"loss": {"kind": "quadratic"}, "bias": 0.05, "delta_hat": {"intercept": 1, "slope": 0.5}}
            },
            "cost": {"c": 2.0, "shape": {"kind": "power", "p": 3}},
            "anchor": {"b0": {"kind": "affine", "beta": 1}, "sigma": 0.5, "noise": {"kind": "logistic"}},
            "message_space": {"kind": "compact", "lo": -3, "hi": 4}
        }"#;
        let m = ModelSpec::from_json_str(s).unwrap();
        assert_eq!(m.sender().bias(), 0.05);
        assert_eq!(m.sender().shift(1.0), 0.05 * 1.5);
        assert_eq!(m.cost.shape, CostShape::Power { p: 3.0 });
        assert_eq!(m.message_space.interval().unwrap().hi, 4.0);
    }

    #[test]
    fn rejects_unknown_section() {
        let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.25).unwrap();
        let mut v = m.to_json_value().unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(ModelSpec::from_json_str(&v.to_string()).is_err());
    }

    #[test]
    fn ideal_actions_on_grid() {
        let m = ModelSpec::gaussian_quadratic(1.0, 1.0, 1.0, 1.0, 0.25).unwrap();
        let g = Grid::uniform(Interval::new(-1.0, 1.0).unwrap(), 5);
        let (ar, as_) = m.ideal_actions(&g).unwrap();
        for i in 0..5 {
            assert_eq!(ar[i], g.nodes[i]);
            assert!((as_[i] - g.nodes[i] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn quartic_receiver_ideal() {
        let mut m = ModelSpec::uniform_quadratic(0.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        m.payoffs.receiver = Payoff::quartic(1.0);
        let g = Grid::uniform(Interval::new(0.0, 1.0).unwrap(), 11);
        let (ar, _) = m.ideal_actions(&g).unwrap();
        assert_eq!(ar, g.nodes);
    }
}
