use crate::numerics::Interval;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Density given by values on a node table, interpolated linearly and
/// normalized over the table range. Linear pieces keep the density
/// nonnegative and give closed-form CDF and quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct LinearDensity {
    xs: Vec<f64>,
    fs: Vec<f64>,
    cum: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    nodes: Vec<f64>,
    density: Vec<f64>,
}

impl TryFrom<RawTable> for LinearDensity {
    type Error = Error;
    fn try_from(t: RawTable) -> Result<Self> {
        LinearDensity::new(t.nodes, t.density)
    }
}

impl From<LinearDensity> for RawTable {
    fn from(d: LinearDensity) -> Self {
        RawTable { nodes: d.xs, density: d.fs }
    }
}

impl LinearDensity {
    pub fn new(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.len() != fs.len() || xs.len() < 2 {
            return Err(Error::InvalidModel("density table needs >= 2 matching entries".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidModel("density nodes must increase".into()));
        }
        if fs.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::InvalidModel("density values must be finite and >= 0".into()));
        }
        let mut cum = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cum[i] = cum[i - 1] + 0.5 * (fs[i] + fs[i - 1]) * (xs[i] - xs[i - 1]);
        }
        let total = cum[xs.len() - 1];
        if !(total > 0.0) {
            return Err(Error::InvalidModel("density table has zero mass".into()));
        }
        let fs: Vec<f64> = fs.iter().map(|f| f / total).collect();
        let cum = cum.iter().map(|c| c / total).collect();
        Ok(LinearDensity { xs, fs, cum })
    }

    pub fn domain(&self) -> Interval {
        Interval { lo: self.xs[0], hi: self.xs[self.xs.len() - 1] }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn node_values(&self) -> &[f64] {
        &self.fs
    }

    fn seg(&self, x: f64) -> usize {
        let n = self.xs.len();
        self.xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1
    }

    fn slope(&self, i: usize) -> f64 {
        (self.fs[i + 1] - self.fs[i]) / (self.xs[i + 1] - self.xs[i])
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !self.domain().contains(x) {
            return 0.0;
        }
        let i = self.seg(x);
        self.fs[i] + self.slope(i) * (x - self.xs[i])
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if !self.domain().contains(x) {
            return 0.0;
        }
        self.slope(self.seg(x))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let d = self.domain();
        if x <= d.lo {
            return 0.0;
        }
        if x >= d.hi {
            return 1.0;
        }
        let i = self.seg(x);
        let t = x - self.xs[i];
        self.cum[i] + self.fs[i] * t + 0.5 * self.slope(i) * t * t
    }

    /// First moment of the density restricted to `[lo, hi]` (unnormalized).
    pub fn partial_first_moment(&self, lo: f64, hi: f64) -> f64 {
        // exact on each linear piece: ∫ x (f_i + m (x - x_i)) dx
        let d = self.domain();
        let (lo, hi) = (lo.max(d.lo), hi.min(d.hi));
        if hi <= lo {
            return 0.0;
        }
        let mut s = 0.0;
        let mut a = lo;
        while a < hi {
            let i = self.seg(a);
            let b = self.xs[i + 1].min(hi);
            let m = self.slope(i);
            let c0 = self.fs[i] - m * self.xs[i];
            s += c0 * 0.5 * (b * b - a * a) + m * (b * b * b - a * a * a) / 3.0;
            if b <= a {
                break;
            }
            a = b;
        }
        s
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.xs.len();
        if p <= 0.0 {
            return self.xs[0];
        }
        if p >= 1.0 {
            return self.xs[n - 1];
        }
        let i = self.cum.partition_point(|&c| c <= p).clamp(1, n - 1) - 1;
        let r = p - self.cum[i];
        let (f0, m) = (self.fs[i], self.slope(i));
        let t = if m.abs() < 1e-14 {
            r / f0
        } else {
            // root of f0 t + m t²/2 = r that lies in the segment
            let disc = (f0 * f0 + 2.0 * m * r).max(0.0);
            2.0 * r / (f0 + disc.sqrt())
        };
        (self.xs[i] + t).min(self.xs[i + 1])
    }
}
