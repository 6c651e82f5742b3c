use crate::numerics::Interval;
use serde::Serialize;

/// Receiver action as a function of the report.
pub trait ActionFn: Sync {
    fn value(&self, r: f64) -> f64;
    fn slope(&self, r: f64) -> f64;
    fn curvature(&self, r: f64) -> f64;
    /// Report domain when messages are restricted.
    fn domain(&self) -> Option<Interval> {
        None
    }
    /// False for rules with jumps, where derivative-based best responses
    /// are not trustworthy.
    fn smooth(&self) -> bool {
        true
    }
    /// Whether the action stays in a bounded set over all reports.
    fn bounded(&self) -> bool {
        true
    }
}

/// `a(r) = α r + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearRule {
    pub alpha: f64,
    pub intercept: f64,
}

impl ActionFn for LinearRule {
    fn value(&self, r: f64) -> f64 {
        self.alpha * r + self.intercept
    }
    fn slope(&self, _r: f64) -> f64 {
        self.alpha
    }
    fn curvature(&self, _r: f64) -> f64 {
        0.0
    }
    fn bounded(&self) -> bool {
        self.alpha == 0.0
    }
}

/// Piecewise-constant rule with a single jump, used as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRule {
    pub at: f64,
    pub low: f64,
    pub high: f64,
}

impl ActionFn for StepRule {
    fn value(&self, r: f64) -> f64 {
        if r < self.at {
            self.low
        } else {
            self.high
        }
    }
    fn slope(&self, _r: f64) -> f64 {
        0.0
    }
    fn curvature(&self, _r: f64) -> f64 {
        0.0
    }
    fn smooth(&self) -> bool {
        false
    }
}

/// Rule tabulated on a uniform report grid with values, slopes and second
/// derivatives, interpolated by quintic Hermite pieces. Outside the grid the
/// end state is held (reports are clamped to the message interval).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionRule {
    pub r: Vec<f64>,
    pub a: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
}

impl ActionRule {
    pub fn new(r: Vec<f64>, a: Vec<f64>, a1: Vec<f64>, a2: Vec<f64>) -> Self {
        assert!(r.len() >= 2 && r.len() == a.len() && a.len() == a1.len() && a1.len() == a2.len());
        ActionRule { r, a, a1, a2 }
    }

    pub fn interval(&self) -> Interval {
        Interval { lo: self.r[0], hi: self.r[self.r.len() - 1] }
    }

    fn piece(&self, x: f64) -> (usize, f64, f64) {
        let n = self.r.len();
        let x = self.interval().clamp(x);
        let i = self.r.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let h = self.r[i + 1] - self.r[i];
        (i, (x - self.r[i]) / h, h)
    }

    /// Value and first two derivatives at `x`.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let (i, t, h) = self.piece(x);
        let (y0, y1) = (self.a[i], self.a[i + 1]);
        let (d0, d1) = (self.a1[i] * h, self.a1[i + 1] * h);
        let (s0, s1) = (self.a2[i] * h * h, self.a2[i + 1] * h * h);
        let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
        let v = y0 * (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5)
            + d0 * (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5)
            + s0 * 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5)
            + s1 * 0.5 * (t3 - 2.0 * t4 + t5)
            + d1 * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5)
            + y1 * (10.0 * t3 - 15.0 * t4 + 6.0 * t5);
        let dv = y0 * (-30.0 * t2 + 60.0 * t3 - 30.0 * t4)
            + d0 * (1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4)
            + s0 * 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4)
            + s1 * 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4)
            + d1 * (-12.0 * t2 + 28.0 * t3 - 15.0 * t4)
            + y1 * (30.0 * t2 - 60.0 * t3 + 30.0 * t4);
        let ddv = y0 * (-60.0 * t + 180.0 * t2 - 120.0 * t3)
            + d0 * (-36.0 * t + 96.0 * t2 - 60.0 * t3)
            + s0 * 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3)
            + s1 * 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3)
            + d1 * (-24.0 * t + 84.0 * t2 - 60.0 * t3)
            + y1 * (60.0 * t - 180.0 * t2 + 120.0 * t3);
        (v, dv / h, ddv / (h * h))
    }

    /// Slope from the tabulated values alone: fourth-order central
    /// differences of `a1` at interior nodes. Independent of the stored `a2`.
    pub fn curvature_from_slopes(&self, i: usize) -> f64 {
        let h = self.r[1] - self.r[0];
        let s = &self.a1;
        (-s[i + 2] + 8.0 * s[i + 1] - 8.0 * s[i - 1] + s[i - 2]) / (12.0 * h)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("r,a,a_prime\n");
        for i in 0..self.r.len() {
            out.push_str(&format!("{},{},{}\n", self.r[i], self.a[i], self.a1[i]));
        }
        out
    }
}

impl ActionFn for ActionRule {
    fn value(&self, r: f64) -> f64 {
        self.eval3(r).0
    }
    fn slope(&self, r: f64) -> f64 {
        if !self.interval().contains(r) {
            return 0.0;
        }
        self.eval3(r).1
    }
    fn curvature(&self, r: f64) -> f64 {
        if !self.interval().contains(r) {
            return 0.0;
        }
        self.eval3(r).2
    }
    fn domain(&self) -> Option<Interval> {
        Some(self.interval())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_interpolation_is_exact_for_quintics() {
        let f = |x: f64| 0.3 * x.powi(5) - x.powi(3) + 2.0 * x - 1.0;
        let f1 = |x: f64| 1.5 * x.powi(4) - 3.0 * x * x + 2.0;
        let f2 = |x: f64| 6.0 * x.powi(3) - 6.0 * x;
        let r: Vec<f64> = (0..=4).map(|i| -1.0 + 0.5 * i as f64).collect();
        let rule = ActionRule::new(
            r.clone(),
            r.iter().map(|&x| f(x)).collect(),
            r.iter().map(|&x| f1(x)).collect(),
            r.iter().map(|&x| f2(x)).collect(),
        );
        for &x in &[-0.9, -0.3, 0.1, 0.77] {
            let (v, d, dd) = rule.eval3(x);
            assert!((v - f(x)).abs() < 1e-13);
            assert!((d - f1(x)).abs() < 1e-12);
            assert!((dd - f2(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn clamps_outside() {
        let rule = ActionRule::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]);
        assert_eq!(rule.value(5.0), 1.0);
        assert_eq!(rule.slope(5.0), 0.0);
    }
}
