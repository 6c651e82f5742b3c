use crate::numerics::{expand_bracket, find_root, Interval};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Cost shape given by closures. `psi` inverts `dphi`; when absent the
/// inverse is found by root-finding.
#[derive(Clone)]
pub struct GeneralShape {
    pub phi: Fn1,
    pub dphi: Fn1,
    pub d2phi: Fn1,
    pub psi: Option<Fn1>,
}

impl fmt::Debug for GeneralShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GeneralShape")
    }
}

impl PartialEq for GeneralShape {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.phi, &other.phi)
    }
}

/// Distortion cost shape φ(u), u = r - b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostShape {
    /// u²/2
    Quadratic,
    /// |u|^p / p, p ≥ 2
    Power { p: f64 },
    #[serde(skip)]
    General(GeneralShape),
}

impl Default for CostShape {
    fn default() -> Self {
        CostShape::Quadratic
    }
}

impl CostShape {
    pub fn general(
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dphi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CostShape::General(GeneralShape { phi: Arc::new(phi), dphi: Arc::new(dphi), d2phi: Arc::new(d2phi), psi: None })
    }

    pub fn phi(&self, u: f64) -> f64 {
        match self {
            CostShape::Quadratic => 0.5 * u * u,
            CostShape::Power { p } => u.abs().powf(*p) / p,
            CostShape::General(g) => (g.phi)(u),
        }
    }

    pub fn dphi(&self, u: f64) -> f64 {
        match self {
            CostShape::Quadratic => u,
            CostShape::Power { p } => u.signum() * u.abs().powf(p - 1.0),
            CostShape::General(g) => (g.dphi)(u),
        }
    }

    pub fn d2phi(&self, u: f64) -> f64 {
        match self {
            CostShape::Quadratic => 1.0,
            CostShape::Power { p } => {
                if *p == 2.0 {
                    1.0
                } else {
                    (p - 1.0) * u.abs().powf(p - 2.0)
                }
            }
            CostShape::General(g) => (g.d2phi)(u),
        }
    }

    /// ψ = (φ')⁻¹
    pub fn psi(&self, y: f64) -> f64 {
        match self {
            CostShape::Quadratic => y,
            CostShape::Power { p } => y.signum() * y.abs().powf(1.0 / (p - 1.0)),
            CostShape::General(g) => match &g.psi {
                Some(f) => f(y),
                None => {
                    let lim = Interval { lo: -1e8, hi: 1e8 };
                    let f = |u: f64| (g.dphi)(u) - y;
                    expand_bracket(f, 0.0, 1.0, lim)
                        .and_then(|br| find_root(f, br, 1e-14))
                        .unwrap_or(f64::NAN)
                }
            },
        }
    }

    /// ψ'(y) = 1 / φ''(ψ(y))
    pub fn dpsi(&self, y: f64) -> f64 {
        match self {
            CostShape::Quadratic => 1.0,
            _ => 1.0 / self.d2phi(self.psi(y)),
        }
    }
}

/// Distortion cost `c·φ(r - b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cost {
    pub c: f64,
    #[serde(default)]
    pub shape: CostShape,
}

impl Cost {
    pub fn quadratic(c: f64) -> Result<Self> {
        let cost = Cost { c, shape: CostShape::Quadratic };
        cost.check()?;
        Ok(cost)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidModel(format!("cost scale must be positive, got {}", self.c)));
        }
        if let CostShape::Power { p } = self.shape {
            if !(p >= 2.0) {
                return Err(Error::InvalidModel(format!("power cost needs p >= 2, got {p}")));
            }
        }
        Ok(())
    }

    pub fn value(&self, u: f64) -> f64 {
        self.c * self.shape.phi(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shapes() -> Vec<CostShape> {
        vec![
            CostShape::Quadratic,
            CostShape::Power { p: 3.0 },
            CostShape::Power { p: 4.0 },
            CostShape::general(|u: f64| u.cosh() - 1.0, f64::sinh, f64::cosh),
        ]
    }

    #[test]
    fn psi_inverts_dphi() {
        for s in shapes() {
            let mut u = -10.0;
            while u <= 10.0 {
                let back = s.psi(s.dphi(u));
                assert!((back - u).abs() <= 1e-10 * (1.0 + u.abs()), "{s:?} at u = {u}: {back}");
                u += 0.05;
            }
        }
    }

    #[test]
    fn dpsi_matches_difference_quotient() {
        let s = CostShape::general(|u: f64| u.cosh() - 1.0, f64::sinh, f64::cosh);
        for &y in &[-3.0, 0.0, 0.7, 5.0] {
            let h = 1e-5;
            let fd = (s.psi(y + h) - s.psi(y - h)) / (2.0 * h);
            assert!((fd - s.dpsi(y)).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(Cost::quadratic(0.0).is_err());
        assert!(Cost { c: 1.0, shape: CostShape::Power { p: 1.5 } }.check().is_err());
    }
}
