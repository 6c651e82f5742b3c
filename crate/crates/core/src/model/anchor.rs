use super::density::LinearDensity;
use crate::numerics::{normal_cdf, normal_pdf, normal_quantile, normal_sf, RngStream, SampledFunction, GAUSS_TRUNCATION};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Anchor location b₀(θ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnchorMean {
    Affine {
        #[serde(default)]
        beta0: f64,
        beta: f64,
    },
    Tabulated {
        #[serde(flatten)]
        table: SampledFunction,
    },
}

impl AnchorMean {
    pub fn value(&self, th: f64) -> f64 {
        match self {
            AnchorMean::Affine { beta0, beta } => beta0 + beta * th,
            AnchorMean::Tabulated { table } => table.eval(th),
        }
    }

    pub fn derivative(&self, th: f64) -> f64 {
        match self {
            AnchorMean::Affine { beta, .. } => *beta,
            AnchorMean::Tabulated { table } => table.derivative(th),
        }
    }
}

/// Standardized noise density h of x = (b - b₀(θ)) / σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    Gaussian,
    /// Standard logistic (scale 1).
    Logistic,
    Tabulated {
        #[serde(flatten)]
        table: LinearDensity,
    },
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Gaussian
    }
}

impl Noise {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Noise::Gaussian => normal_pdf(x),
            Noise::Logistic => {
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Noise::Tabulated { table } => table.pdf(x),
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match self {
            Noise::Gaussian => -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln(),
            Noise::Logistic => {
                let a = x.abs();
                -a - 2.0 * (-a).exp().ln_1p()
            }
            Noise::Tabulated { table } => table.pdf(x).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Noise::Gaussian => normal_cdf(x),
            Noise::Logistic => 1.0 / (1.0 + (-x).exp()),
            Noise::Tabulated { table } => table.cdf(x),
        }
    }

    /// 1 - H(x), accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Noise::Gaussian => normal_sf(x),
            Noise::Logistic => 1.0 / (1.0 + x.exp()),
            Noise::Tabulated { table } => 1.0 - table.cdf(x),
        }
    }

    /// ln H(x), finite far into the lower tail.
    pub fn log_cdf(&self, x: f64) -> f64 {
        match self {
            Noise::Gaussian => {
                if x > -30.0 {
                    normal_cdf(x).ln()
                } else {
                    let z = 1.0 / (x * x);
                    -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
                        + (1.0 - z + 3.0 * z * z - 15.0 * z * z * z).ln()
                }
            }
            // -softplus(-x)
            Noise::Logistic => -((-x).max(0.0) + (-x.abs()).exp().ln_1p()),
            Noise::Tabulated { table } => table.cdf(x).ln(),
        }
    }

    /// ln(1 - H(x)).
    pub fn log_sf(&self, x: f64) -> f64 {
        match self {
            Noise::Tabulated { table } => (1.0 - table.cdf(x)).ln(),
            // both built-in noises are symmetric
            _ => self.log_cdf(-x),
        }
    }

    /// h'/h
    pub fn score(&self, x: f64) -> f64 {
        match self {
            Noise::Gaussian => -x,
            Noise::Logistic => -(0.5 * x).tanh(),
            Noise::Tabulated { table } => {
                let f = table.pdf(x);
                if f > 0.0 {
                    table.derivative(x) / f
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width beyond which the noise mass is negligible.
    pub fn tail_bound(&self) -> (f64, f64) {
        match self {
            Noise::Gaussian => (-GAUSS_TRUNCATION, GAUSS_TRUNCATION),
            Noise::Logistic => (-36.0, 36.0),
            Noise::Tabulated { table } => {
                let d = table.domain();
                (d.lo, d.hi)
            }
        }
    }

    /// Inverse of H.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Noise::Gaussian => normal_quantile(u),
            Noise::Logistic => (u / (1.0 - u)).ln(),
            Noise::Tabulated { table } => table.quantile(u),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Noise::Gaussian => rng.normal(),
            Noise::Logistic => {
                let u = rng.uniform().max(f64::MIN_POSITIVE);
                (u / (1.0 - u)).ln()
            }
            Noise::Tabulated { table } => table.quantile(rng.uniform()),
        }
    }

    /// Length scale of the noise density.
    pub fn scale(&self) -> f64 {
        match self {
            Noise::Gaussian => 1.0,
            Noise::Logistic => 1.0,
            Noise::Tabulated { table } => {
                let (lo, hi) = (table.quantile(0.25), table.quantile(0.75));
                (hi - lo).max(1e-6)
            }
        }
    }
}

/// Public anchor `b = b₀(θ) + σ x`, x ~ h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub b0: AnchorMean,
    pub sigma: f64,
    #[serde(default)]
    pub noise: Noise,
}

impl Anchor {
    pub fn gaussian_affine(beta0: f64, beta: f64, sigma: f64) -> Result<Self> {
        let a = Anchor { b0: AnchorMean::Affine { beta0, beta }, sigma, noise: Noise::Gaussian };
        a.check()?;
        Ok(a)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidModel(format!("anchor sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    /// β when b₀ is affine.
    pub fn beta(&self) -> Option<f64> {
        match self.b0 {
            AnchorMean::Affine { beta, .. } => Some(beta),
            _ => None,
        }
    }

    pub fn mean(&self, th: f64) -> f64 {
        self.b0.value(th)
    }

    /// Density q(b | θ).
    pub fn q(&self, b: f64, th: f64) -> f64 {
        self.noise.pdf((b - self.b0.value(th)) / self.sigma) / self.sigma
    }

    pub fn log_q(&self, b: f64, th: f64) -> f64 {
        self.noise.log_pdf((b - self.b0.value(th)) / self.sigma) - self.sigma.ln()
    }

    /// P(b' ≤ b | θ)
    pub fn cdf(&self, b: f64, th: f64) -> f64 {
        self.noise.cdf((b - self.b0.value(th)) / self.sigma)
    }

    pub fn sf(&self, b: f64, th: f64) -> f64 {
        self.noise.sf((b - self.b0.value(th)) / self.sigma)
    }

    pub fn sample(&self, th: f64, rng: &mut RngStream) -> f64 {
        self.b0.value(th) + self.sigma * self.noise.sample(rng)
    }
}
