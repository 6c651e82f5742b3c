use super::density::LinearDensity;
use crate::numerics::{
    normal_cdf, normal_pdf, normal_quantile, normal_sf, GaussLegendre, Interval, QuadRule, RngStream,
    GAUSS_TRUNCATION,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum PriorKind {
    Uniform,
    Gaussian { mean: f64, sd: f64 },
    Tabulated(LinearDensity),
}

/// Prior over the state, always with compact support. Gaussian priors are
/// truncated (by default at ±8 sd) and renormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorDoc", into = "PriorDoc")]
pub struct Prior {
    kind: PriorKind,
    support: Interval,
    mass: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PriorDoc {
    Uniform { lo: f64, hi: f64 },
    Gaussian {
        #[serde(default)]
        mean: f64,
        sd: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<Interval>,
    },
    Tabulated {
        #[serde(flatten)]
        table: LinearDensity,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<Interval>,
    },
}

impl TryFrom<PriorDoc> for Prior {
    type Error = Error;
    fn try_from(d: PriorDoc) -> Result<Self> {
        match d {
            PriorDoc::Uniform { lo, hi } => Prior::uniform(lo, hi),
            PriorDoc::Gaussian { mean, sd, support } => {
                let p = Prior::gaussian(mean, sd)?;
                match support {
                    Some(s) => p.restrict(s),
                    None => Ok(p),
                }
            }
            PriorDoc::Tabulated { table, support } => {
                let p = Prior::tabulated(table)?;
                match support {
                    Some(s) => p.restrict(s),
                    None => Ok(p),
                }
            }
        }
    }
}

impl From<Prior> for PriorDoc {
    fn from(p: Prior) -> Self {
        match p.kind {
            PriorKind::Uniform => PriorDoc::Uniform { lo: p.support.lo, hi: p.support.hi },
            PriorKind::Gaussian { mean, sd } => {
                let default = Interval { lo: mean - GAUSS_TRUNCATION * sd, hi: mean + GAUSS_TRUNCATION * sd };
                PriorDoc::Gaussian { mean, sd, support: (p.support != default).then_some(p.support) }
            }
            PriorKind::Tabulated(table) => {
                let full = table.domain();
                PriorDoc::Tabulated { table, support: (p.support != full).then_some(p.support) }
            }
        }
    }
}

/// Mass of the standard normal on [a, b] without cancellation in either tail.
fn std_normal_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        normal_sf(a) - normal_sf(b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

impl Prior {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let support = Interval::new(lo, hi)?;
        Ok(Prior { kind: PriorKind::Uniform, support, mass: support.width() })
    }

    /// Normal prior truncated at ±8 sd.
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidModel(format!("gaussian prior needs sd > 0, got {sd}")));
        }
        let support = Interval::new(mean - GAUSS_TRUNCATION * sd, mean + GAUSS_TRUNCATION * sd)?;
        let mass = std_normal_mass(-GAUSS_TRUNCATION, GAUSS_TRUNCATION);
        Ok(Prior { kind: PriorKind::Gaussian { mean, sd }, support, mass })
    }

    pub fn tabulated(table: LinearDensity) -> Result<Self> {
        let support = table.domain();
        Ok(Prior { kind: PriorKind::Tabulated(table), support, mass: 1.0 })
    }

    /// The same prior conditioned on `iv ∩ support`.
    pub fn restrict(&self, iv: Interval) -> Result<Self> {
        let lo = iv.lo.max(self.support.lo);
        let hi = iv.hi.min(self.support.hi);
        let support = Interval::new(lo, hi)
            .map_err(|_| Error::InvalidModel(format!("restriction [{}, {}] misses the support", iv.lo, iv.hi)))?;
        let mass = self.base_mass(lo, hi);
        if !(mass > 0.0) {
            return Err(Error::InvalidModel("restriction has zero prior mass".into()));
        }
        Ok(Prior { kind: self.kind.clone(), support, mass })
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.kind, PriorKind::Gaussian { .. })
    }

    fn base_mass(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            PriorKind::Uniform => hi - lo,
            PriorKind::Gaussian { mean, sd } => std_normal_mass((lo - mean) / sd, (hi - mean) / sd),
            PriorKind::Tabulated(t) => t.cdf(hi) - t.cdf(lo),
        }
    }

    fn base_pdf(&self, x: f64) -> f64 {
        match &self.kind {
            PriorKind::Uniform => 1.0,
            PriorKind::Gaussian { mean, sd } => normal_pdf((x - mean) / sd) / sd,
            PriorKind::Tabulated(t) => t.pdf(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        self.base_pdf(x) / self.mass
    }

    /// d/dθ log f.
    pub fn score(&self, x: f64) -> f64 {
        match &self.kind {
            PriorKind::Uniform => 0.0,
            PriorKind::Gaussian { mean, sd } => -(x - mean) / (sd * sd),
            PriorKind::Tabulated(t) => {
                let f = t.pdf(x);
                if f > 0.0 {
                    t.derivative(x) / f
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.support.lo {
            return 0.0;
        }
        if x >= self.support.hi {
            return 1.0;
        }
        (self.base_mass(self.support.lo, x) / self.mass).clamp(0.0, 1.0)
    }

    /// Prior probability of `[lo, hi] ∩ support`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.max(self.support.lo), hi.min(self.support.hi));
        if hi <= lo {
            0.0
        } else {
            self.base_mass(lo, hi) / self.mass
        }
    }

    /// E[θ | θ ∈ [lo, hi]].
    pub fn cell_mean(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.max(self.support.lo), hi.min(self.support.hi));
        if hi <= lo {
            return lo;
        }
        match &self.kind {
            PriorKind::Uniform => 0.5 * (lo + hi),
            PriorKind::Gaussian { mean, sd } => {
                let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
                let z = std_normal_mass(a, b);
                if z < 1e-280 {
                    return 0.5 * (lo + hi);
                }
                (mean + sd * (normal_pdf(a) - normal_pdf(b)) / z).clamp(lo, hi)
            }
            PriorKind::Tabulated(t) => {
                let m = t.cdf(hi) - t.cdf(lo);
                if m <= 0.0 {
                    0.5 * (lo + hi)
                } else {
                    (t.partial_first_moment(lo, hi) / m).clamp(lo, hi)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.cell_mean(self.support.lo, self.support.hi)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.rule(self.natural_scale()).integrate(|x| (x - m) * (x - m) * self.density(x))
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match &self.kind {
            PriorKind::Uniform => self.support.lo + p * self.support.width(),
            PriorKind::Gaussian { mean, sd } => {
                let (a, b) = ((self.support.lo - mean) / sd, (self.support.hi - mean) / sd);
                let z = if a > 0.0 || p > 0.5 {
                    // upper-tail mass beyond the quantile keeps its relative precision
                    let s = normal_sf(b) + (1.0 - p) * self.mass;
                    -normal_quantile(s.min(normal_sf(a)))
                } else {
                    normal_quantile(normal_cdf(a) + p * self.mass)
                };
                self.support.clamp(mean + sd * z)
            }
            PriorKind::Tabulated(t) => {
                let base = t.cdf(self.support.lo) + p * self.mass;
                self.support.clamp(t.quantile(base))
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        if let PriorKind::Gaussian { mean, sd } = self.kind {
            if self.support.lo <= mean - 6.0 * sd && self.support.hi >= mean + 6.0 * sd {
                loop {
                    let x = mean + sd * rng.normal();
                    if self.support.contains(x) {
                        return x;
                    }
                }
            }
        }
        self.quantile(rng.uniform())
    }

    /// Length scale over which the density changes appreciably.
    pub fn natural_scale(&self) -> f64 {
        match &self.kind {
            PriorKind::Gaussian { sd, .. } => *sd,
            _ => self.support.width(),
        }
    }

    /// Composite 10-point Gauss-Legendre rule over the support with panels no
    /// wider than `scale / 2`. Tabulated priors also break at table nodes.
    pub fn rule(&self, scale: f64) -> QuadRule {
        rule_on(self.support, scale, match &self.kind {
            PriorKind::Tabulated(t) => Some(t.nodes()),
            _ => None,
        })
    }
}

/// Composite rule over `iv` with panel width at most `scale / 2`, aligned to
/// optional breakpoints.
pub fn rule_on(iv: Interval, scale: f64, breaks: Option<&[f64]>) -> QuadRule {
    let gl = GaussLegendre::new(10);
    let mut cuts = vec![iv.lo];
    if let Some(b) = breaks {
        cuts.extend(b.iter().copied().filter(|&x| x > iv.lo && x < iv.hi));
    }
    cuts.push(iv.hi);
    let mut rule = QuadRule::default();
    for w in cuts.windows(2) {
        let seg = Interval { lo: w[0], hi: w[1] };
        let panels = ((seg.width() / (0.5 * scale)).ceil() as usize).clamp(1, 4096);
        let r = gl.composite(seg, panels);
        rule.x.extend(r.x);
        rule.w.extend(r.w);
    }
    rule
}
