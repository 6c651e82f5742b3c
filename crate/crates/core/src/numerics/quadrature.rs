use super::Interval;
use crate::{Error, Result};

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        GaussLegendre { nodes, weights }
    }

    /// Composite rule with `panels` equal panels over `iv`.
    pub fn composite(&self, iv: Interval, panels: usize) -> QuadRule {
        let panels = panels.max(1);
        let h = iv.width() / panels as f64;
        let mut x = Vec::with_capacity(panels * self.nodes.len());
        let mut w = Vec::with_capacity(x.capacity());
        for p in 0..panels {
            let a = iv.lo + h * p as f64;
            let c = a + 0.5 * h;
            for (t, wt) in self.nodes.iter().zip(&self.weights) {
                x.push(c + 0.5 * h * t);
                w.push(0.5 * h * wt);
            }
        }
        QuadRule { x, w }
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule, by Newton iteration
/// on the Legendre recurrence from Chebyshev starting points.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // p1 = P_n(z), p0 = P_{n-1}(z)
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Precomputed nodes and weights over a fixed interval.
#[derive(Debug, Clone, Default)]
pub struct QuadRule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl QuadRule {
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.w).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

const DOUBLING_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 1 << 14;

/// Composite Gauss–Legendre of order `n`; the panel count doubles until two
/// successive estimates agree to 1e-10 (relative to max(1, |I|)).
pub fn quadrature(mut f: impl FnMut(f64) -> f64, iv: Interval, n: usize) -> Result<f64> {
    let gl = GaussLegendre::new(n);
    let mut eval = |panels: usize| -> Result<f64> {
        let rule = gl.composite(iv, panels);
        let mut s = 0.0;
        for (&x, &w) in rule.x.iter().zip(&rule.w) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { x });
            }
            s += w * v;
        }
        Ok(s)
    };
    let mut panels = 1;
    let mut prev = eval(panels)?;
    loop {
        panels *= 2;
        let cur = eval(panels)?;
        if (cur - prev).abs() <= DOUBLING_TOL * cur.abs().max(1.0) || panels >= MAX_PANELS {
            return Ok(cur);
        }
        prev = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_pdf;

    #[test]
    fn weights_sum_to_two_and_nodes_symmetric() {
        for n in [1, 2, 5, 16, 33, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_for_polynomials_of_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(5);
        // ∫ t^8 over [-1,1] = 2/9
        let s: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn reference_integrals() {
        let unit = Interval::new(0.0, 1.0).unwrap();
        assert!((quadrature(|x| x * x, unit, 16).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let iv = Interval::new(-2.0, 3.0).unwrap();
        assert!((quadrature(|_| 1.0, iv, 4).unwrap() - 5.0).abs() < 1e-14);
        let wide = Interval::new(-8.0, 8.0).unwrap();
        assert!((quadrature(normal_pdf, wide, 64).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_is_error() {
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let r = quadrature(|x| if x > 0.5 { f64::NAN } else { x }, iv, 8);
        assert!(matches!(r, Err(Error::NonFiniteIntegrand { .. })));
    }
}
