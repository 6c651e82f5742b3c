//! Numerical primitives: intervals and grids, quadrature, root finding,
//! the normal distribution, reproducible random streams, ODE steppers and
//! small linear solvers.

mod linalg;
mod normal;
mod ode;
mod quadrature;
mod rng;
mod roots;
mod spline;

pub use linalg::{solve_dense, solve_tridiagonal};
pub use normal::{normal_cdf, normal_pdf, normal_pdf_cdf, normal_quantile, normal_sf};
pub use ode::{rk4_step, Rk4};
pub use quadrature::{gauss_legendre, quadrature, GaussLegendre, QuadRule};
pub use rng::RngStream;
pub use roots::{expand_bracket, find_root, golden_section_max};
pub use spline::SampledFunction;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Gaussian tails are cut at this many standard deviations everywhere.
pub const GAUSS_TRUNCATION: f64 = 8.0;

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidModel(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Ordered set of nodes over an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nodes: Vec<f64>,
}

impl Grid {
    /// `n` equally spaced nodes including both endpoints.
    pub fn uniform(iv: Interval, n: usize) -> Self {
        assert!(n >= 2, "grid needs at least two nodes");
        let h = iv.width() / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| iv.lo + h * i as f64).collect();
        nodes[n - 1] = iv.hi;
        Grid { nodes }
    }

    /// `n` log-spaced nodes between positive `lo` and `hi`.
    pub fn log_uniform(lo: f64, hi: f64, n: usize) -> Self {
        assert!(lo > 0.0 && hi > lo && n >= 2);
        let (a, b) = (lo.ln(), hi.ln());
        let mut nodes: Vec<f64> = (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect();
        nodes[0] = lo;
        nodes[n - 1] = hi;
        Grid { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interval(&self) -> Interval {
        Interval { lo: self.nodes[0], hi: self.nodes[self.nodes.len() - 1] }
    }
}

/// Least-squares slope of `log y` on `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Central finite-difference step used wherever an analytic partial is missing.
pub fn fd_step(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}
